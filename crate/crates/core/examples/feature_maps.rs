//! Base random feature maps and their single-draw softmax estimates.
use hrf::closed_form::sm_exact;
use hrf::features::{cexp_features, pos_plus_features, pos_plusplus_features, trig_features, DiagMatrix, Side};
use hrf::rng::{sample_ensemble, EnsembleScheme, Seed};

fn main() -> hrf::Result<()> {
    let x = [0.4, -0.3, 0.5, 0.1];
    let y = [0.2, 0.6, -0.1, 0.3];
    let ens = sample_ensemble(4, 256, EnsembleScheme::BlockOrthogonal, Seed(7))?;

    println!("exact          {:.6}", sm_exact(&x, &y));
    let trig = trig_features(&x, &ens)?.dot(&trig_features(&y, &ens)?)?;
    println!("trig           {:.6}", trig.re);
    let plus = pos_plus_features(&x, &ens)?.dot(&pos_plus_features(&y, &ens)?)?;
    println!("pos_plus       {:.6}", plus.re);
    let pp = pos_plusplus_features(&x, &ens)?.dot(&pos_plusplus_features(&y, &ens)?)?;
    println!("pos_plusplus   {:.6}", pp.re);

    // A = iI recovers trig-like behaviour, A = I the positive map.
    for (name, a) in [("cexp A=I", DiagMatrix::identity(4)), ("cexp A=iI", DiagMatrix::imaginary_identity(4))] {
        let v = cexp_features(&x, &a, Side::Query, &ens)?.dot(&cexp_features(&y, &a, Side::Key, &ens)?)?;
        println!("{name:<14} {:.6} (imag {:+.2e})", v.re, v.im);
    }
    Ok(())
}
