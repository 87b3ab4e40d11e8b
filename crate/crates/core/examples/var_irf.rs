//! Fit a VAR to simulated data, pick the lag by AIC and bootstrap the
//! impulse responses.

use materiel_pulse::econ::{fit_var, irf, irf_bands, select_lag, BootstrapOptions, VarData};
use materiel_pulse::simgen::{simulate_var_data, SimSpec};
use materiel_pulse::svg::render_irf_svg;
use nalgebra::{DMatrix, DVector};

fn main() -> materiel_pulse::Result<()> {
    let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.3, 0.2]);
    let spec = SimSpec::new(vec![a.clone()], DMatrix::identity(2, 2), 400, 9)?
        .with_names(vec!["mines".into(), "fatalities".into()])?;
    let data: VarData = simulate_var_data(&spec)?;

    let lag = select_lag(&data, 6)?;
    println!("AIC by lag: {:?} -> p = {}", lag.aic, lag.lag_order);
    let model = fit_var(&data, lag.lag_order)?;
    println!("A1 estimate:{}", model.coefficients[0]);

    // Without noise the fit is exact, so Psi_2 is A squared.
    let exact = SimSpec::new(vec![a.clone()], DMatrix::zeros(2, 2), 12, 0)?
        .with_burn_in(0)
        .with_initial(vec![DVector::from_column_slice(&[1.0, -2.0])])?;
    let exact_model = fit_var(&simulate_var_data(&exact)?, 1)?;
    println!("noise-free Psi_2:{}", irf(&exact_model, 2)[2]);

    let bands = irf_bands(
        &data,
        lag.lag_order,
        &BootstrapOptions {
            reps: 500,
            seed: 9,
            ..Default::default()
        },
    )?;
    let r = bands.pair("mines", "fatalities").expect("pair exists");
    for h in 0..=r.horizon() {
        println!(
            "h={h:2}  {:+.3}  [{:+.3}, {:+.3}]",
            r.point[h], r.lower[h], r.upper[h]
        );
    }
    let cross: Vec<_> = bands
        .results
        .iter()
        .filter(|r| r.impulse != r.response)
        .cloned()
        .collect();
    let svg = render_irf_svg(&cross);
    println!("svg: {} bytes, {} cells", svg.len(), cross.len());
    Ok(())
}
