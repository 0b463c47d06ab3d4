//! Compare the analytic meta-loss gradient with central finite differences on a random MDP.

use metaplan::mdp::random_mdp;
use metaplan::meta::{meta_loss, meta_loss_and_gradient, MetaPlanConfig};
use metaplan::planner::TemperatureField;

fn main() {
    let mdp = random_mdp(4, 3, 0.9, true, 11).unwrap();
    let temps = TemperatureField::random(4, -1.0, 1.0, 5);
    let config = MetaPlanConfig { lambda: 0.5, horizon: 6, ..Default::default() };
    let (loss, grad) = meta_loss_and_gradient(&mdp, &temps, &config).unwrap();
    println!("loss {loss:.6}");
    println!("{:>5} {:>14} {:>14} {:>10}", "param", "analytic", "numeric", "rel err");
    let h = 1e-5;
    for (i, g) in grad.iter().enumerate() {
        let mut plus = temps.clone();
        plus.raw_mut()[i] += h;
        let mut minus = temps.clone();
        minus.raw_mut()[i] -= h;
        let fd = (meta_loss(&mdp, &plus, &config).unwrap() - meta_loss(&mdp, &minus, &config).unwrap()) / (2.0 * h);
        let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
        println!("{i:>5} {g:>14.8} {fd:>14.8} {rel:>10.1e}");
    }
}
