//! Run a WAV file through the model and write the NAP of each ear as CSV.
//! With no argument a short test file is synthesized first.
//!
//! cargo run --release --example process_wav -- input.wav [out_dir]

use std::path::PathBuf;

use carfac::io::{read_wav, write_plane_file, write_wav, OutputFormat, Stimulus, StimulusSpec, WavAudio, WavEncoding};
use carfac::{default_design, Carfac, OutputSelection, RunOptions};

fn main() -> carfac::Result<()> {
    let mut args = std::env::args().skip(1);
    let out_dir = std::env::temp_dir().join("carfac_process_wav");
    std::fs::create_dir_all(&out_dir)?;
    let input = match args.next() {
        Some(p) => PathBuf::from(p),
        None => {
            let path = out_dir.join("tone.wav");
            let tone = StimulusSpec::new(Stimulus::Tone { freq: 1000.0, level_dbfs: -30.0, ramp: 0.005 }, 0.25);
            let audio = WavAudio { sample_rate: 22050, channels: vec![tone.synthesize(22050.0)?] };
            write_wav(&path, &audio, WavEncoding::Pcm16)?;
            path
        }
    };
    let out_dir = args.next().map(PathBuf::from).unwrap_or(out_dir);

    let audio = read_wav(&input)?;
    let params = default_design(audio.sample_rate as f64)?;
    let mut model = Carfac::<f64>::new(&params, audio.channels.len())?;
    let opts = RunOptions { outputs: OutputSelection::nap_only(), ..Default::default() };
    let out = model.run_segment(&audio.channels, opts)?;

    for (ear, nap) in out.nap.iter().enumerate() {
        let path = out_dir.join(format!("nap_ear{ear}.csv"));
        write_plane_file(&path, nap, model.pole_freqs(), OutputFormat::Csv)?;
        println!("{}: {} samples x {} channels -> {}", input.display(), nap.n_samples(), nap.n_ch(), path.display());
    }
    Ok(())
}
