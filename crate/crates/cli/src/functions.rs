use zygmund::experiments::Witness;
use zygmund::growth::GrowthFunction;
use zygmund::polyapprox::MultiIndex;

use crate::config::ConfigError;

/// Named test functions: `zero`, `one`, `abs_x1`, `abs_pow:s`,
/// `monomial:a,b`, `smooth`, `zygmund` (`x1^2 ln|x1|`) and `witness:a,b`.
pub enum TestFunction {
    Zero,
    One,
    AbsPow(f64),
    Monomial(MultiIndex),
    Smooth,
    Zygmund,
    Witness(Box<Witness>),
}

fn pair(args: &str) -> Result<MultiIndex, ConfigError> {
    let v: Vec<u32> = args
        .split(',')
        .map(|t| t.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| ConfigError(format!("bad multi-index `{args}`")))?;
    if v.len() != 2 {
        return Err(ConfigError(format!("expected two indices, got `{args}`")));
    }
    Ok(MultiIndex(v))
}

impl TestFunction {
    pub fn parse(spec: &str, omega: &GrowthFunction) -> Result<Self, ConfigError> {
        let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
        match name.trim() {
            "zero" => Ok(TestFunction::Zero),
            "one" => Ok(TestFunction::One),
            "abs_x1" => Ok(TestFunction::AbsPow(1.0)),
            "abs_pow" => args
                .trim()
                .parse()
                .map(TestFunction::AbsPow)
                .map_err(|_| ConfigError(format!("bad exponent in `{spec}`"))),
            "monomial" => Ok(TestFunction::Monomial(pair(args)?)),
            "smooth" => Ok(TestFunction::Smooth),
            "zygmund" => Ok(TestFunction::Zygmund),
            "witness" => Witness::new(pair(args)?, omega)
                .map(|w| TestFunction::Witness(Box::new(w)))
                .map_err(|e| ConfigError(e.to_string())),
            _ => Err(ConfigError(format!("unknown function `{spec}`"))),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Zero => 0.0,
            TestFunction::One => 1.0,
            TestFunction::AbsPow(s) => x[0].abs().powf(*s),
            TestFunction::Monomial(k) => k.pow(x),
            TestFunction::Smooth => (3.0 * x[0]).sin() * (2.0 * x[1]).cos(),
            TestFunction::Zygmund => {
                if x[0] == 0.0 {
                    0.0
                } else {
                    x[0] * x[0] * x[0].abs().ln()
                }
            }
            TestFunction::Witness(w) => w.eval(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_suite() {
        let om = GrowthFunction::power(2.0).unwrap();
        assert_eq!(TestFunction::parse("abs_pow:1.5", &om).unwrap().eval(&[-4.0, 0.0]), 8.0);
        assert_eq!(
            TestFunction::parse("monomial:1,2", &om).unwrap().eval(&[2.0, 3.0]),
            18.0
        );
        assert!(TestFunction::parse("witness:0,2", &om).is_err());
        assert!(TestFunction::parse("witness:2,0", &om).is_ok());
        assert!(TestFunction::parse("gauss", &om).is_err());
    }
}
