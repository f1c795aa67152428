//! File formats and stimulus synthesis.

pub mod planes;
pub mod stimulus;
pub mod wav;

pub use planes::{
    read_csv, read_raw64, read_raw64_bytes, write_csv, write_pgm, write_plane_file, write_raw64, OutputFormat,
    RAW64_MAGIC,
};
pub use stimulus::{dbfs_to_amplitude, uniform_noise, Stimulus, StimulusSpec};
pub use wav::{read_wav, write_wav, WavAudio, WavEncoding};
