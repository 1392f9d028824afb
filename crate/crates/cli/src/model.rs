use ugat::special::{self, ShiftedDistribution, Support};
use ugat::{parse_real_list, SeriesAccuracy, UgatParams};

use crate::args::{ModelArgs, ModelKind, SupportArg};
use crate::error::{CliError, CliResult};

/// A model built from command-line flags.
#[derive(Debug, Clone)]
pub enum Model {
    Ugat(UgatParams),
    Named(ShiftedDistribution),
}

impl Model {
    /// Underlying UGAT parameters (the base distribution of named models).
    pub fn params(&self) -> &UgatParams {
        match self {
            Model::Ugat(p) => p,
            Model::Named(d) => &d.base,
        }
    }
}

const FLAGS: [&str; 10] = ["alpha", "beta", "s", "p", "a", "c", "theta", "b", "sigma", "support"];

fn required(kind: ModelKind) -> &'static [&'static str] {
    match kind {
        ModelKind::Ugat => &["alpha", "beta", "s"],
        ModelKind::Lerch => &["p", "a", "c"],
        ModelKind::Hlz => &["theta", "a", "s"],
        ModelKind::Good => &["theta", "s"],
        ModelKind::Hzeta => &["b", "sigma"],
        ModelKind::Zipf => &["a", "c"],
        ModelKind::Dpareto => &["c"],
        ModelKind::Geom => &["p"],
    }
}

impl ModelArgs {
    fn is_set(&self, flag: &str) -> bool {
        match flag {
            "alpha" => self.alpha.is_some(),
            "beta" => self.beta.is_some(),
            "s" => self.s.is_some(),
            "p" => self.p.is_some(),
            "a" => self.a.is_some(),
            "c" => self.c.is_some(),
            "theta" => self.theta.is_some(),
            "b" => self.b.is_some(),
            "sigma" => self.sigma.is_some(),
            "support" => self.support.is_some(),
            _ => false,
        }
    }

    fn kind_name(&self) -> String {
        format!("{:?}", self.model).to_lowercase()
    }

    fn check_flags(&self) -> CliResult<()> {
        let need = required(self.model);
        for flag in need {
            if !self.is_set(flag) {
                return Err(CliError::Usage(format!("model {} requires --{flag}", self.kind_name())));
            }
        }
        for flag in FLAGS {
            let allowed = need.contains(&flag) || (flag == "support" && self.model != ModelKind::Ugat);
            if self.is_set(flag) && !allowed {
                return Err(CliError::Usage(format!("--{flag} is not used by model {}", self.kind_name())));
            }
        }
        Ok(())
    }

    pub fn build(&self, acc: SeriesAccuracy) -> CliResult<Model> {
        self.check_flags()?;
        let v = |x: Option<f64>| x.expect("checked");
        let named = match self.model {
            ModelKind::Ugat => {
                let alphas = parse_real_list(self.alpha.as_deref().expect("checked"))?;
                return Ok(Model::Ugat(UgatParams::with_accuracy(alphas, v(self.beta), v(self.s), acc)?));
            }
            ModelKind::Lerch => special::make_lerch(v(self.p), v(self.a), v(self.c), acc)?,
            ModelKind::Hlz => special::make_hurwitz_lerch_zeta(v(self.theta), v(self.a), v(self.s), acc)?,
            ModelKind::Good => special::make_good(v(self.theta), v(self.s), acc)?,
            ModelKind::Hzeta => special::make_hurwitz_zeta(v(self.b), v(self.sigma), acc)?,
            ModelKind::Zipf => special::make_zipf_mandelbrot(v(self.a), v(self.c), acc)?,
            ModelKind::Dpareto => special::make_discrete_pareto(v(self.c), acc)?,
            ModelKind::Geom => special::make_geometric(v(self.p), Support::N0, acc)?,
        };
        let default = match self.model {
            ModelKind::Geom => SupportArg::N0,
            _ => SupportArg::N,
        };
        let support = match self.support.unwrap_or(default) {
            SupportArg::N0 => Support::N0,
            SupportArg::N => Support::N,
        };
        Ok(Model::Named(named.on_support(support)))
    }
}
