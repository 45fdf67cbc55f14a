//! Brute-force Grassmannian sweep against the multistart search.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use warpsplit::harness::generate::{random_form, FormFamily};
use warpsplit::harness::oracle::oracle_profile;
use warpsplit::harness::run::search_values;
use warpsplit::harness::RunConfig;

fn main() {
    let config = RunConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for family in FormFamily::ALL {
        let form = random_form(7, 3, family, &mut rng);
        let oracle: Vec<usize> = oracle_profile(&form, config.grid_res, config.grid_res_2d, config.tol.rank_tol)
            .unwrap()
            .iter()
            .map(|o| o.value)
            .collect();
        let search = search_values(&form, &config).unwrap();
        println!("{family:?}: oracle {oracle:?} search {search:?}");
    }
}
