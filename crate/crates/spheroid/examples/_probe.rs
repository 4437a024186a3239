use spheroid::*;

fn main() {
    let cfg = SolverConfig::default();
    for (lambda, tilde, bar, nu) in [(1.0, 1.5, 2.0, 1.0), (0.5, 1.5, 2.0, 1.0), (1.0, 1.5, 2.2, 1.0)] {
        let params = ModelParams::linear_preset(lambda, 1.0, tilde, bar, nu);
        let sigma_star = supply_threshold(&params, &cfg).unwrap();
        let oracle = linear_closed_form(&params).unwrap();
        let f50 = oracle.growth_rate_at(50.0).unwrap();
        let target = -nu / 3.0;
        let state = find_stationary(&params, &cfg).unwrap();
        println!(
            "lambda={lambda} tilde={tilde} bar={bar}: sigma*={sigma_star:.4} R_s={:.4} ({:?})  F(50)={f50:.6} rel dev={:.3}%",
            state.radius, state.regime, ((f50 - target) / target).abs() * 100.0
        );
    }
}
