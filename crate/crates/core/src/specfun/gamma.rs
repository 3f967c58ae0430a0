use std::f64::consts::PI;

const LANCZOS_G: f64 = 607.0 / 128.0;

// Godfrey's coefficients for g = 607/128, n = 15.
const LANCZOS_COEF: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_92,
    -59.597_960_355_475_49,
    14.136_097_974_741_747,
    -0.491_913_816_097_620_2,
    0.339_946_499_848_118_9e-4,
    0.465_236_289_270_485_8e-4,
    -0.983_744_753_048_795_6e-4,
    0.158_088_703_224_912_5e-3,
    -0.210_264_441_724_104_9e-3,
    0.217_439_618_115_212_6e-3,
    -0.164_318_106_536_763_9e-3,
    0.844_182_239_838_527_4e-4,
    -0.261_908_384_015_814_1e-4,
    0.368_991_826_595_316_2e-5,
];

// Taylor coefficients of 1/Γ(z) = Σ c_k z^k, starting at k = 2.
const RGAMMA_TAYLOR: [f64; 29] = [
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_9,
    -0.042_002_635_034_095_24,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_34,
    -0.009_621_971_527_876_974,
    0.007_218_943_246_663_1,
    -0.001_165_167_591_859_065,
    -0.000_215_241_674_114_950_97,
    0.000_128_050_282_388_116_19,
    -0.000_020_134_854_780_788_24,
    -1.250_493_482_142_670_7e-6,
    1.133_027_231_981_695_9e-6,
    -2.056_338_416_977_607e-7,
    6.116_095_104_481_416e-9,
    5.002_007_644_469_223e-9,
    -1.181_274_570_487_020_1e-9,
    1.043_426_711_691_100_5e-10,
    7.782_263_439_905_071e-12,
    -3.696_805_618_642_205_7e-12,
    5.100_370_287_454_476e-13,
    -2.058_326_053_566_506_8e-14,
    -5.348_122_539_423_018e-15,
    1.226_778_628_238_260_8e-15,
    -1.181_259_301_697_458_8e-16,
    1.186_692_254_751_600_3e-18,
    1.412_380_655_318_031_8e-18,
    -2.298_745_684_435_370_2e-19,
    1.714_406_321_927_337_4e-20,
];

/// Natural log of |Γ(x)|. Returns +∞ at the poles (x a non-positive integer).
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::INFINITY;
    }
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx)
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Γ(x) for every real x that is not a pole.
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if (x - 1.0).abs() <= 0.5 {
        return 1.0 + gamma1pm1(x - 1.0);
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    ln_gamma(x).exp()
}

/// (Γ(1+a) − 1)/a for |a| ≤ 1/2, regular at a = 0 where it equals −γ.
pub(crate) fn gamma1pm1_over_a(a: f64) -> f64 {
    debug_assert!(a.abs() <= 0.5 + 1e-12);
    let q = RGAMMA_TAYLOR.iter().rev().fold(0.0, |acc, &c| acc * a + c);
    // 1/Γ(1+a) = 1 + a q
    -q / (1.0 + a * q)
}

/// Γ(1+a) − 1 for |a| ≤ 1/2 without cancellation near a = 0.
pub(crate) fn gamma1pm1(a: f64) -> f64 {
    a * gamma1pm1_over_a(a)
}
