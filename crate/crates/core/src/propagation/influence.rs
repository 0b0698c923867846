use num_complex::Complex64;

/// Influence factor coupling path point k (later) to k′ (earlier):
/// exp(−(s[j_k⁺] − s[j_k⁻])·(η·s[j_k′⁺] − η*·s[j_k′⁻])).
pub fn influence_pair_factor(
    later_plus: usize,
    later_minus: usize,
    earlier_plus: usize,
    earlier_minus: usize,
    eta: Complex64,
    coords: &[f64],
) -> Complex64 {
    let ds = coords[later_plus] - coords[later_minus];
    if ds == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    (-(eta * coords[earlier_plus] - eta.conj() * coords[earlier_minus]) * ds).exp()
}

/// `table[later * M² + earlier]` over combined digits `j⁺·M + j⁻`.
pub(crate) fn pair_table(eta: Complex64, coords: &[f64]) -> Vec<Complex64> {
    let m = coords.len();
    let d = m * m;
    let mut t = Vec::with_capacity(d * d);
    for later in 0..d {
        for earlier in 0..d {
            t.push(influence_pair_factor(
                later / m,
                later % m,
                earlier / m,
                earlier % m,
                eta,
                coords,
            ));
        }
    }
    t
}

/// Self factors, `table[digit]` for the pair coupled to itself.
pub(crate) fn self_table(eta: Complex64, coords: &[f64]) -> Vec<Complex64> {
    let m = coords.len();
    (0..m * m)
        .map(|dg| influence_pair_factor(dg / m, dg % m, dg / m, dg % m, eta, coords))
        .collect()
}
