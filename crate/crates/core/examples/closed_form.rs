//! Relative-error curves and the max-error bound on a same-length grid.
use hrf::closed_form::{max_rel_error_bound, rel_err, rel_err_angular_hybrid, w_scale, RelErrFamily};

fn main() -> hrf::Result<()> {
    let (r, m, n) = (1.5, 16, 8);
    println!("theta   trig      ++        hybrid");
    for i in 0..=8 {
        let t = std::f64::consts::PI * i as f64 / 8.0;
        println!(
            "{t:.3}  {:.3e} {:.3e} {:.3e}",
            rel_err(t, r, m, RelErrFamily::Trig)?,
            rel_err(t, r, m, RelErrFamily::PosPlusPlus)?,
            rel_err_angular_hybrid(t, r, m, n)?
        );
    }
    println!("sup of regular maps {:.4e}", w_scale(r) / (2.0 * m as f64).sqrt());
    println!("hybrid bound        {:.4e}", max_rel_error_bound(r, m, n)?);
    Ok(())
}
