use std::collections::BTreeMap;

use adelion::wavelet::kozyrev_basis;
use adelion::{
    decompose, eigen_check, fractional_apply, gram_deviation, lizorkin_check, AdelicIndex,
    AdelicSum, LocalIndex, PAdicScalar, Prime, Symbol,
};
use num_complex::Complex64;

fn main() -> adelion::Result<()> {
    let p2 = Prime::new(2)?;
    let p3 = Prime::new(3)?;

    // Kozyrev wavelets on Q_3 with j in -1..=1 and shifts of depth 1.
    let basis: Vec<_> = kozyrev_basis(p3, -1, 1, 1)
        .into_iter()
        .map(|(_, f)| f)
        .collect();
    let (dev, _) = gram_deviation(&basis);
    println!("{} wavelets, Gram deviation {dev:e}", basis.len());

    // A tensor wavelet on Q_2 x Q_3 and the operator |xi|_2^1 |xi|_3^2.
    let alpha = AdelicIndex {
        real: None,
        places: [
            (p2, LocalIndex::wavelet(1, 1, PAdicScalar::ratio(1, 2))),
            (p3, LocalIndex::wavelet(2, 0, PAdicScalar::ratio(0, 1))),
        ]
        .into(),
    };
    let gammas: BTreeMap<Prime, Complex64> = [
        (p2, Complex64::new(1.0, 0.0)),
        (p3, Complex64::new(2.0, 0.0)),
    ]
    .into();
    let symbol = Symbol::fractional(&gammas, p3)?;
    let e = eigen_check(&symbol, &alpha)?;
    println!("eigenfunction: {}, lambda = {}", e.is_eigen, e.lambda);

    // Apply the operator to a combination and expand the result again.
    let mut f = AdelicSum::new();
    f.push(Complex64::new(0.5, -1.0), alpha.build()?);
    let g = fractional_apply(&f, &gammas)?;
    println!(
        "Lizorkin after applying: {}",
        lizorkin_check(&g, 0, 1e-12)?.passes
    );
    let d = decompose(&g)?;
    for (index, c) in &d.coefficients {
        println!(
            "{} -> {c}",
            serde_json::to_string(index).unwrap_or_default()
        );
    }
    Ok(())
}
