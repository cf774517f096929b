//! Evaluates the Hamiltonian and its partial gradients at a state/adjoint
//! point and checks them against central differences.

use fbdsde::adjoint::{eval_hamiltonian, eval_hamiltonian_gradients};
use fbdsde::model::{example31, Arg, EvalCtx, StateVec};
use fbdsde::paths::AdjointVec;

fn main() -> fbdsde::Result<()> {
    let spec = example31(1.0);
    let shape = spec.shape();
    let ctx = EvalCtx::at(0.4);
    let flat: Vec<f64> = (0..shape.state_size()).map(|i| 0.3 - 0.07 * i as f64).collect();
    let pt = StateVec::from_flat(&shape, &flat);
    let mut adj = AdjointVec::zeros(&shape);
    adj.p = vec![-1.4];
    adj.big_p = vec![3.6];
    adj.q = vec![0.2];
    adj.big_q = vec![-0.1];
    let v = [0.3];

    let grads = eval_hamiltonian_gradients(&spec, &ctx, &pt.view(), &v, &adj.view())?;
    println!("H = {:.6}", eval_hamiltonian(&spec, &ctx, &pt.view(), &v, &adj.view())?);
    for arg in [Arg::Y, Arg::BigY, Arg::Z, Arg::BigZ, Arg::V] {
        let h = 1e-6;
        let fd = if arg == Arg::V {
            (eval_hamiltonian(&spec, &ctx, &pt.view(), &[v[0] + h], &adj.view())?
                - eval_hamiltonian(&spec, &ctx, &pt.view(), &[v[0] - h], &adj.view())?)
                / (2.0 * h)
        } else {
            let (mut up, mut dn) = (pt.clone(), pt.clone());
            up.block_mut(arg)[0] += h;
            dn.block_mut(arg)[0] -= h;
            (eval_hamiltonian(&spec, &ctx, &up.view(), &v, &adj.view())?
                - eval_hamiltonian(&spec, &ctx, &dn.view(), &v, &adj.view())?)
                / (2.0 * h)
        };
        println!("H_{:<2} analytic {:>10.6}  central difference {:>10.6}", arg.label(), grads.block(arg)[0], fd);
    }
    Ok(())
}
