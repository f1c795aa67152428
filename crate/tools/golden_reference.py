#!/usr/bin/env python3
"""Independent NumPy implementation of the CARFAC v2 model used to produce
golden data for the Rust crate.

This is written as a literal, channel-vectorized transliteration of the
classic NumPy/Matlab structure (design -> car_step/ihc_step/agc_step ->
close_agc_loop) and shares no code with the Rust implementation.

Usage:
    python3 tools/golden_reference.py OUT_DIR

Writes raw64 planes (16-byte header: b"CFR64\\0\\0\\0", u32 n_ch, u32 n_samples;
then little-endian f64, samples x channels) plus the stimuli it used.
"""

import dataclasses
import math
import os
import struct
import sys

import numpy as np


# ----------------------------------------------------------------- params

def erb_hz(cf_hz, erb_break_freq=1000 / 4.37, erb_q=1000 / (24.7 * 4.37)):
    return (erb_break_freq + cf_hz) / erb_q


@dataclasses.dataclass
class CarParams:
    velocity_scale: float = 0.1
    v_offset: float = 0.04
    min_zeta: float = 0.10
    max_zeta: float = 0.30
    first_pole_theta: float = 0.85 * math.pi
    zero_ratio: float = math.sqrt(2.0)
    high_f_damping_compression: float = 0.5
    erb_per_step: float = 0.5
    min_pole_hz: float = 30.0
    erb_break_freq: float = 165.3
    erb_q: float = 1000 / (24.7 * 4.37)
    ac_corner_hz: float = 20.0
    use_delay_buffer: bool = False


@dataclasses.dataclass
class AgcParams:
    n_stages: int = 4
    time_constants: tuple = (0.002, 0.008, 0.032, 0.128)
    agc_stage_gain: float = 2.0
    decimation: tuple = (8, 2, 2, 2)
    agc1_scales: tuple = tuple(1.0 * math.sqrt(2) ** k for k in range(4))
    agc2_scales: tuple = tuple(1.65 * math.sqrt(2) ** k for k in range(4))
    agc_mix_coeff: float = 0.5


@dataclasses.dataclass
class IhcParams:
    style: str = "two_cap"
    tau_lpf: float = 0.000080
    tau_out: float = 0.0005
    tau_in: float = 0.010
    tau1_out: float = 0.0005
    tau1_in: float = 0.000200
    tau2_out: float = 0.001
    tau2_in: float = 0.010


def one_pole(tau, fs):
    return 1.0 - math.exp(-1.0 / (tau * fs))


# ----------------------------------------------------------------- design

def design_pole_freqs(cp, fs):
    pole_hz = cp.first_pole_theta * fs / (2 * math.pi)
    freqs = []
    while pole_hz >= cp.min_pole_hz:
        freqs.append(pole_hz)
        pole_hz = pole_hz - cp.erb_per_step * erb_hz(pole_hz, cp.erb_break_freq, cp.erb_q)
    return np.array(freqs)


def stage_g_exact(cc, undamping):
    r = cc["r1"] + cc["zr"] * undamping
    a0, c0, h = cc["a0"], cc["c0"], cc["h"]
    return (1 - 2 * r * a0 + r * r) / (1 - 2 * r * a0 + h * r * c0 + r * r)


def stage_g(cc, undamping):
    return cc["ga"] * undamping ** 2 + cc["gb"] * undamping + cc["gc"]


def design_filters(cp, fs, pole_freqs):
    theta = pole_freqs * (2 * math.pi / fs)
    c0 = np.sin(theta)
    a0 = np.cos(theta)
    ff = cp.high_f_damping_compression
    x = theta / math.pi
    zr_coeffs = math.pi * (x - ff * x ** 3)
    r1 = 1 - zr_coeffs * cp.max_zeta
    min_zetas = cp.min_zeta + 0.25 * (
        erb_hz(pole_freqs, cp.erb_break_freq, cp.erb_q) / pole_freqs - cp.min_zeta)
    zr = zr_coeffs * (cp.max_zeta - min_zetas)
    f = cp.zero_ratio ** 2 - 1
    h = c0 * f
    cc = dict(a0=a0, c0=c0, r1=r1, zr=zr, h=h,
              velocity_scale=cp.velocity_scale, v_offset=cp.v_offset,
              ac_coeff=2 * math.pi * cp.ac_corner_hz / fs,
              use_delay_buffer=cp.use_delay_buffer)
    g0 = stage_g_exact(cc, 0.0)
    g1 = stage_g_exact(cc, 1.0)
    gh = stage_g_exact(cc, 0.5)
    cc["ga"] = 2 * (g0 + g1 - 2 * gh)
    cc["gb"] = 4 * gh - 3 * g0 - g1
    cc["gc"] = g0
    cc["g_init"] = stage_g(cc, np.ones_like(a0))
    return cc


def ihc_detect(x):
    x = np.asarray(x, dtype=float)
    a = 0.175
    z = np.maximum(x + a, 0.0)
    return z ** 3 / (z ** 3 + z ** 2 + 0.1)


def design_ihc(ip, fs):
    if ip.style == "just_hwr":
        return dict(style="just_hwr")
    lpf = one_pole(ip.tau_lpf, fs)
    if ip.style == "one_cap":
        ro = 1 / float(ihc_detect(10.0))
        c = ip.tau_out / ro
        ri = ip.tau_in / c
        saturation_output = 1 / (2 * ro + ri)
        r0 = 1 / float(ihc_detect(0.0))
        current = 1 / (ri + r0)
        out_rate = 1 / (c * fs)
        in_rate = one_pole(ip.tau_in, fs)
        g0 = float(ihc_detect(0.0))
        rest_cap = in_rate / (g0 * out_rate + in_rate)
        output_gain = 1 / (saturation_output - current)
        rest_output = g0 * rest_cap * output_gain
        return dict(style="one_cap", lpf=lpf, out_rate=out_rate, in_rate=in_rate,
                    output_gain=output_gain, rest_output=rest_output,
                    rest_cap=rest_cap)
    g1_max = float(ihc_detect(10.0))
    r1min = 1 / g1_max
    c1 = ip.tau1_out * g1_max
    r1 = ip.tau1_in / c1
    max_vrecep = r1 / (r1min + r1)
    g2max = max_vrecep
    r2min = 1 / g2max
    c2 = ip.tau2_out * g2max
    r2 = ip.tau2_in / c2
    saturation_current2 = 1 / (2 * r2min + r2)
    g10 = float(ihc_detect(0.0))
    rest_current1 = 1 / (r1 + 1 / g10)
    rest_current2 = 1 / (r2 + 1 / (r1 * rest_current1))
    out1 = 1 / (c1 * fs)
    in1 = one_pole(ip.tau1_in, fs)
    out2 = 1 / (c2 * fs)
    in2 = one_pole(ip.tau2_in, fs)
    rest_cap1 = in1 / (g10 * out1 + in1)
    rest_vrecep = 1 - rest_cap1
    rest_cap2 = in2 / (rest_vrecep * out2 + in2)
    output_gain = 1 / (saturation_current2 - rest_current2)
    rest_output = rest_vrecep * rest_cap2 * output_gain
    return dict(style="two_cap", lpf=lpf, out1=out1, in1=in1, out2=out2, in2=in2,
                output_gain=output_gain, rest_output=rest_output,
                rest_cap1=rest_cap1, rest_cap2=rest_cap2)


def design_fir(spread_sq, delay, n_iter):
    mean = delay / n_iter
    var = spread_sq / n_iter
    a = (var + mean * mean - mean) / 2
    b = (var + mean * mean + mean) / 2
    fir = (a, 1 - a - b, b)
    return fir, fir[1] >= 0.25 and a >= 0 and b >= 0


def design_agc(ap, fs, n_ch):
    decimation = list(ap.decimation)
    while True:
        stages = []
        decim = 1
        total_dc_gain = 0.0
        failed = None
        for k in range(ap.n_stages):
            tau = ap.time_constants[k]
            decim *= decimation[k]
            eps = 1 - math.exp(-decim / (tau * fs))
            ntimes = tau * (fs / decim)
            delay = (ap.agc2_scales[k] - ap.agc1_scales[k]) / ntimes
            spread_sq = (ap.agc1_scales[k] ** 2 + ap.agc2_scales[k] ** 2) / ntimes
            n_iter = 1
            while True:
                fir, ok = design_fir(spread_sq, delay, n_iter)
                if ok:
                    break
                n_iter += 1
                if n_iter > 16:
                    break
            if not ok:
                failed = k
                break
            total_dc_gain += ap.agc_stage_gain ** k
            mix = 0.0 if k == 0 else ap.agc_mix_coeff / (tau * (fs / decim))
            stages.append(dict(decimation=decimation[k], eps=eps, fir=fir, n_iter=n_iter,
                               stage_gain=ap.agc_stage_gain, mix=mix))
        if failed is None:
            break
        if decimation[0] == 1:
            raise ValueError(f"AGC stage {failed} infeasible")
        decimation[0] = max(1, decimation[0] // 2)
    stages[0]["detect_scale"] = 1 / total_dc_gain
    return stages


class Ear:
    def __init__(self, cp, ip, ap, fs):
        self.pole_freqs = design_pole_freqs(cp, fs)
        self.n_ch = len(self.pole_freqs)
        self.car = design_filters(cp, fs, self.pole_freqs)
        self.ihc = design_ihc(ip, fs)
        self.agc = design_agc(ap, fs, self.n_ch)
        self.health = np.ones(self.n_ch)
        self.reset()

    def reset(self):
        n = self.n_ch
        cc = self.car
        self.z1 = np.zeros(n); self.z2 = np.zeros(n); self.za = np.zeros(n)
        self.zb = cc["zr"].copy(); self.dzb = np.zeros(n)
        self.g = cc["g_init"].copy(); self.dg = np.zeros(n)
        self.zy = np.zeros(n); self.ac = np.zeros(n)
        ic = self.ihc
        if ic["style"] == "two_cap":
            self.cap1 = np.full(n, ic["rest_cap1"]); self.cap2 = np.full(n, ic["rest_cap2"])
            self.lpf1 = np.full(n, ic["rest_output"])
        elif ic["style"] == "one_cap":
            self.cap = np.full(n, ic["rest_cap"])
            self.lpf1 = np.full(n, ic["rest_output"]); self.lpf2 = np.full(n, ic["rest_output"])
        self.agc_mem = [np.zeros(n) for _ in self.agc]
        self.agc_acc = [np.zeros(n) for _ in self.agc]
        self.agc_phase = [0 for _ in self.agc]

    # ---- CAR
    def car_step(self, x, linear):
        cc = self.car
        g = self.g + self.dg
        zb = self.zb + self.dzb
        v = self.z2 - self.za
        if linear:
            nlf = np.ones(self.n_ch)
        else:
            nlf = 1 / (1 + (v * cc["velocity_scale"] + cc["v_offset"]) ** 2)
        r = cc["r1"] + zb * nlf
        za = self.z2
        z1 = r * (cc["a0"] * self.z1 - cc["c0"] * self.z2)
        z2 = r * (cc["c0"] * self.z1 + cc["a0"] * self.z2)
        if cc["use_delay_buffer"]:
            zy = np.concatenate(([x], self.zy[:-1]))
            z1 = z1 + zy
            zy = g * (zy + cc["h"] * z2)
        else:
            zy = cc["h"] * z2
            in_out = x
            for ch in range(self.n_ch):
                z1[ch] = z1[ch] + in_out
                in_out = g[ch] * (in_out + zy[ch])
                zy[ch] = in_out
        self.za, self.z1, self.z2, self.zb, self.zy, self.g = za, z1, z2, zb, zy, g
        bm_raw = zy.copy()
        ac_diff = bm_raw - self.ac
        self.ac = self.ac + cc["ac_coeff"] * ac_diff
        return ac_diff, bm_raw

    # ---- IHC
    def ihc_step(self, bm):
        ic = self.ihc
        if ic["style"] == "just_hwr":
            return np.minimum(2.0, np.maximum(0.0, bm)), np.zeros(self.n_ch)
        cond = ihc_detect(bm)
        if ic["style"] == "one_cap":
            out = cond * self.cap
            self.cap = self.cap - out * ic["out_rate"] + (1 - self.cap) * ic["in_rate"]
            out = out * ic["output_gain"]
            self.lpf1 = self.lpf1 + ic["lpf"] * (out - self.lpf1)
            self.lpf2 = self.lpf2 + ic["lpf"] * (self.lpf1 - self.lpf2)
            return self.lpf2 - ic["rest_output"], np.zeros(self.n_ch)
        receptor_current = cond * self.cap1
        self.cap1 = self.cap1 - receptor_current * ic["out1"] + (1 - self.cap1) * ic["in1"]
        vrecep = 1 - self.cap1
        out = vrecep * self.cap2
        self.cap2 = self.cap2 - out * ic["out2"] + (1 - self.cap2) * ic["in2"]
        out = out * ic["output_gain"]
        self.lpf1 = self.lpf1 + ic["lpf"] * (out - self.lpf1)
        return self.lpf1 - ic["rest_output"], ic["rest_cap1"] - self.cap1

    # ---- AGC
    def spatial_smooth(self, st, x):
        a, m, b = st["fir"]
        for _ in range(st["n_iter"]):
            left = np.concatenate((x[:1], x[:-1]))
            right = np.concatenate((x[1:], x[-1:]))
            x = a * left + m * x + b * right
        return x

    def agc_recurse(self, agc_in, k):
        st = self.agc[k]
        self.agc_phase[k] = (self.agc_phase[k] + 1) % st["decimation"]
        self.agc_acc[k] = self.agc_acc[k] + agc_in
        if self.agc_phase[k] != 0:
            return False
        agc_in = self.agc_acc[k] / st["decimation"]
        self.agc_acc[k] = np.zeros(self.n_ch)
        if k < len(self.agc) - 1:
            self.agc_recurse(agc_in, k + 1)
            agc_in = agc_in + st["stage_gain"] * self.agc_mem[k + 1]
        mem = self.agc_mem[k]
        mem = mem + st["eps"] * (agc_in - mem)
        self.agc_mem[k] = self.spatial_smooth(st, mem)
        return True

    def agc_step(self, nap):
        return self.agc_recurse(self.agc[0]["detect_scale"] * nap, 0)

    def close_loop(self, open_loop):
        if open_loop:
            self.dzb[:] = 0
            self.dg[:] = 0
            return
        decim1 = self.agc[0]["decimation"]
        u = np.clip(1 - self.agc_mem[0], 0.0, 1.0) * self.health
        new_g = stage_g(self.car, u)
        self.dzb = (self.car["zr"] * u - self.zb) / decim1
        self.dg = (new_g - self.g) / decim1


def cross_couple(ears):
    if len(ears) < 2:
        return
    for k in range(len(ears[0].agc)):
        if ears[0].agc_phase[k] > 0:
            break
        mix = ears[0].agc[k]["mix"]
        if mix > 0:
            mean = sum(e.agc_mem[k] for e in ears) / len(ears)
            for e in ears:
                e.agc_mem[k] = e.agc_mem[k] + mix * (mean - e.agc_mem[k])


def run_segment(ears, audio, open_loop=False, linear=False):
    """audio: samples x ears. Returns dict of planes, each ears x samples x ch."""
    n_samp = audio.shape[0]
    n_ch = ears[0].n_ch
    out = {k: np.zeros((len(ears), n_samp, n_ch)) for k in ("nap", "bm", "bm_raw", "rp")}
    if open_loop:
        for e in ears:
            e.dzb[:] = 0
            e.dg[:] = 0
    for t in range(n_samp):
        updated = False
        for i, e in enumerate(ears):
            bm, bm_raw = e.car_step(audio[t, i], linear)
            nap, rp = e.ihc_step(bm)
            updated = e.agc_step(nap)
            out["nap"][i, t] = nap
            out["bm"][i, t] = bm
            out["bm_raw"][i, t] = bm_raw
            out["rp"][i, t] = rp
        if updated:
            cross_couple(ears)
            for e in ears:
                e.close_loop(open_loop)
    return out


# ------------------------------------------------------------------ io

MAGIC = b"CFR64\0\0\0"


def write_raw64(path, plane):
    plane = np.ascontiguousarray(plane, dtype="<f8")
    n_samples, n_ch = plane.shape
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", n_ch, n_samples))
        f.write(plane.tobytes())


def make_ears(n_ears=1, fs=22050.0, style="two_cap", delay=False):
    cp = CarParams(use_delay_buffer=delay)
    return [Ear(cp, IhcParams(style=style), AgcParams(), fs) for _ in range(n_ears)]


def write_coeffs_csv(path, ear):
    cc = ear.car
    with open(path, "w") as f:
        f.write("channel,pole_hz,a0,c0,r1,zr,h,g0,g1,g2\n")
        for ch in range(ear.n_ch):
            vals = [ear.pole_freqs[ch], cc["a0"][ch], cc["c0"][ch], cc["r1"][ch],
                    cc["zr"][ch], cc["h"][ch], cc["gc"][ch], cc["gb"][ch], cc["ga"][ch]]
            f.write(f"{ch}," + ",".join(repr(float(v)) for v in vals) + "\n")


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    fs = 22050.0
    rng = np.random.default_rng(20240101)

    ear = make_ears()[0]
    write_coeffs_csv(os.path.join(out_dir, "car_coeffs.csv"), ear)

    # impulse, linear open loop
    n = 512
    imp = np.zeros((n, 1)); imp[0, 0] = 1.0
    out = run_segment(make_ears(), imp, open_loop=True, linear=True)
    write_raw64(os.path.join(out_dir, "stim_impulse.raw64"), imp)
    write_raw64(os.path.join(out_dir, "impulse_bm.raw64"), out["bm"][0])

    # noise, closed loop, two_cap
    n = int(0.1 * fs)
    noise = rng.uniform(-0.1, 0.1, size=(n, 1))
    write_raw64(os.path.join(out_dir, "stim_noise.raw64"), noise)
    out = run_segment(make_ears(), noise)
    for k in ("nap", "bm", "rp"):
        write_raw64(os.path.join(out_dir, f"noise_two_cap_{k}.raw64"), out[k][0])
    out = run_segment(make_ears(style="one_cap"), noise)
    write_raw64(os.path.join(out_dir, "noise_one_cap_nap.raw64"), out["nap"][0])

    # binaural: ear 0 loud noise, ear 1 quieter time-reversed noise
    n = int(0.05 * fs)
    bin_stim = np.zeros((n, 2))
    bin_stim[:, 0] = noise[:n, 0] * 3
    bin_stim[:, 1] = noise[:n, 0][::-1] * 0.3
    write_raw64(os.path.join(out_dir, "stim_binaural.raw64"), bin_stim)
    out = run_segment(make_ears(2), bin_stim)
    write_raw64(os.path.join(out_dir, "binaural_ear0_nap.raw64"), out["nap"][0])
    write_raw64(os.path.join(out_dir, "binaural_ear1_nap.raw64"), out["nap"][1])

    # toneburst (3 kHz, 10 ms, -40 dBFS) one_cap and two_cap
    n = int(0.03 * fs)
    t = np.arange(n) / fs
    amp = 10 ** (-40 / 20)
    tb = np.where(t < 0.010, amp * np.sin(2 * np.pi * 3000 * t), 0.0).reshape(-1, 1)
    write_raw64(os.path.join(out_dir, "stim_toneburst.raw64"), tb)
    for style in ("two_cap", "one_cap"):
        out = run_segment(make_ears(style=style), tb)
        write_raw64(os.path.join(out_dir, f"toneburst_{style}_nap.raw64"), out["nap"][0])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "golden")
