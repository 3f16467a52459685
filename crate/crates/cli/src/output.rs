//! File outputs: atomic writes, histograms and F2 curves.

use std::fs;
use std::io::Write;
use std::path::Path;

use stochdom_core::empirical_f2;

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::other(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn span(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo < hi {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// CSV `bin_left,bin_right,count` with equal-width bins over the sample range.
pub fn histogram_csv(values: &[f64], bins: usize) -> String {
    let (lo, hi) = span(values);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in values {
        let i = (((x - lo) / width).floor() as usize).min(bins - 1);
        counts[i] += 1;
    }
    let mut out = String::from("bin_left,bin_right,count\n");
    for (i, c) in counts.iter().enumerate() {
        let left = lo + i as f64 * width;
        let right = if i + 1 == bins {
            hi
        } else {
            lo + (i + 1) as f64 * width
        };
        out.push_str(&format!("{left:.16e},{right:.16e},{c}\n"));
    }
    out
}

/// CSV `eta,f2_method,f2_baseline` on an even grid over the pooled range.
pub fn f2_curve_csv(method: &[f64], baseline: &[f64], points: usize) -> String {
    let pooled: Vec<f64> = method.iter().chain(baseline).copied().collect();
    let (lo, hi) = span(&pooled);
    let mut out = String::from("eta,f2_method,f2_baseline\n");
    for i in 0..points {
        let eta = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let fm = empirical_f2(method, eta).expect("nonempty finite batch");
        let fb = empirical_f2(baseline, eta).expect("nonempty finite batch");
        out.push_str(&format!("{eta:.16e},{fm:.16e},{fb:.16e}\n"));
    }
    out
}
