#![allow(dead_code)]

use rakelgen::domain::LabelVector;

pub fn lv(bits: &[u8]) -> LabelVector {
    LabelVector::from_bits(bits.iter().map(|&b| b == 1).collect())
}

/// Two-tailed Student t p-value from the closed-form finite series for
/// integer degrees of freedom: P(|T| <= t) expressed in θ = atan(t / √ν).
pub fn t_two_tailed_series(t: f64, df: u32) -> f64 {
    let theta = (t.abs() / (df as f64).sqrt()).atan();
    let (s, c) = theta.sin_cos();
    let a = if df % 2 == 1 {
        let mut sum = 0.0;
        if df > 1 {
            let mut term = c;
            sum = term;
            let mut k = 1;
            while 2 * k < df - 2 {
                term *= (2 * k) as f64 / (2 * k + 1) as f64 * c * c;
                sum += term;
                k += 1;
            }
        }
        2.0 / std::f64::consts::PI * (theta + s * sum)
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1;
        while 2 * k <= df - 2 {
            term *= (2 * k - 1) as f64 / (2 * k) as f64 * c * c;
            sum += term;
            k += 1;
        }
        s * sum
    };
    1.0 - a
}

/// Brute-force cell counts (tp, fp, fn, tn).
pub fn brute_confusion(gold: &[LabelVector], pred: &[LabelVector]) -> (u64, u64, u64, u64) {
    let (mut tp, mut fp, mut fne, mut tn) = (0, 0, 0, 0);
    for i in 0..gold.len() {
        for j in 0..gold[i].len() {
            let g = gold[i].get(j);
            let p = pred[i].get(j);
            if g && p {
                tp += 1;
            } else if !g && p {
                fp += 1;
            } else if g && !p {
                fne += 1;
            } else {
                tn += 1;
            }
        }
    }
    (tp, fp, fne, tn)
}
