//! PCA and t-SNE of clustered points, with clustering purity and retrieval AUC.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use scenaware::eval::{kmeans_purity, pca, same_diff_auc, tsne, TsneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let noise = Normal::new(0.0, 0.3)?;
    let (groups, per, dim) = (4, 30, 10);
    let mut data = Array2::zeros((groups * per, dim));
    let mut labels = Vec::new();
    for (i, mut row) in data.rows_mut().into_iter().enumerate() {
        let g = i / per;
        for (d, v) in row.iter_mut().enumerate() {
            *v = if d % groups == g { 2.0 } else { 0.0 } + noise.sample(&mut rng);
        }
        labels.push(format!("g{g}"));
    }

    let p = pca(data.view())?;
    println!("pca eigenvalues {:?}", &p.eigenvalues[..4]);
    let t = tsne(data.view(), &TsneConfig { perplexity: 10.0, ..TsneConfig::default() }, 7)?;
    println!("t-SNE KL: first {:.3}, last {:.3}", t.kl[0], t.kl[t.kl.len() - 1]);

    println!("purity (k = 4): {:.3}", kmeans_purity(data.view(), &labels, 4, 10, 7)?);

    // treat every group as one clip whose rows are its windows
    let clips: Vec<Array2<f64>> = (0..groups).map(|g| data.slice(ndarray::s![g * per..(g + 1) * per, ..]).to_owned()).collect();
    println!("same/different-clip AUC: {:.3}", same_diff_auc(&clips, 2000, 7)?);
    Ok(())
}
