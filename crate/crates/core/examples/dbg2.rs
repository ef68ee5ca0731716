use nalgebra::DMatrix;

fn main() {
    let m = DMatrix::from_column_slice(
        3,
        2,
        &[
            0.28975174404086645,
            -0.40177570145854036,
            0.27569182966802874,
            -0.4210408324048287,
            0.5838238397566953,
            -0.4006102459706527,
        ],
    );
    let svd = nalgebra::SVD::try_new(m.clone(), true, true, f64::EPSILON, 0).unwrap();
    println!("svd sigma  {:?}", svd.singular_values.as_slice());
    println!("fro        {:.16}", m.norm());
    let gram = m.transpose() * &m;
    let tr = gram.trace();
    let det = gram[(0, 0)] * gram[(1, 1)] - gram[(0, 1)] * gram[(1, 0)];
    let disc = f64::sqrt(f64::max(tr * tr / 4.0 - det, 0.0));
    println!("gram eig   {:?}", [tr / 2.0 + disc, tr / 2.0 - disc]);
    let recon = svd.u.as_ref().unwrap()
        * DMatrix::from_diagonal(&svd.singular_values)
        * svd.v_t.as_ref().unwrap();
    println!("recon err  {:.3e}", (recon - &m).norm());

    let mut padded = DMatrix::zeros(3, 3);
    padded.view_mut((0, 0), (3, 2)).copy_from(&m);
    let svd2 = nalgebra::SVD::try_new(padded, true, true, f64::EPSILON, 0).unwrap();
    println!("padded sigma {:?}", svd2.singular_values.as_slice());

    let qr = m.clone().col_piv_qr();
    println!("colpivqr r diag {:?}", (0..2).map(|i| qr.r()[(i, i)]).collect::<Vec<_>>());
    let q = qr.q();
    println!("q col0 {:?}", q.column(0).as_slice());
}
