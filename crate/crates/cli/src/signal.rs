//! Parsing and resolution of the signal, noise, and loss-model options
//! shared by the generate/experiment/check commands.

use anyhow::{bail, Context};
use matreg::datagen::{make_lowrank_sparse, make_shape, NoiseSpec, ShapeKind, SyntheticSpec};
use matreg::io::DEFAULT_ROBUST_ALPHA;
use matreg::{Mat64, LossModel};

/// `gaussian[:sigma]`, `contaminated:p[:sigma_out[:sigma]]`, or `cauchy`.
pub fn parse_noise(s: &str) -> anyhow::Result<NoiseSpec<f64>> {
    let mut parts = s.split(':');
    let kind = parts.next().unwrap_or("").to_ascii_lowercase();
    let nums: Vec<f64> = parts
        .map(|t| t.parse::<f64>().with_context(|| format!("bad noise parameter '{t}'")))
        .collect::<anyhow::Result<_>>()?;
    let spec = match (kind.as_str(), nums.as_slice()) {
        ("gaussian", []) => NoiseSpec::Gaussian { sigma: 1.0 },
        ("gaussian", [sigma]) => NoiseSpec::Gaussian { sigma: *sigma },
        ("contaminated", [p]) => NoiseSpec::contaminated(*p),
        ("contaminated", [p, sigma_out]) => {
            NoiseSpec::Contaminated { p: *p, sigma: 1.0, sigma_out: *sigma_out }
        }
        ("contaminated", [p, sigma_out, sigma]) => {
            NoiseSpec::Contaminated { p: *p, sigma: *sigma, sigma_out: *sigma_out }
        }
        ("cauchy", []) => NoiseSpec::Cauchy,
        _ => bail!("bad noise spec '{s}' (gaussian[:sigma] | contaminated:p[:sigma_out[:sigma]] | cauchy)"),
    };
    spec.validate()?;
    Ok(spec)
}

/// `ordinary`, `robust[:alpha]`, or `logistic`.
pub fn parse_model(s: &str) -> anyhow::Result<LossModel<f64>> {
    let (kind, param) = match s.split_once(':') {
        Some((k, p)) => (k.to_ascii_lowercase(), Some(p)),
        None => (s.to_ascii_lowercase(), None),
    };
    let model = match (kind.as_str(), param) {
        ("ordinary", None) => LossModel::Ordinary,
        ("robust", None) => LossModel::Robust { alpha: DEFAULT_ROBUST_ALPHA },
        ("robust", Some(p)) => LossModel::Robust {
            alpha: p.parse().with_context(|| format!("bad Huber threshold '{p}'"))?,
        },
        ("logistic", None) => LossModel::Logistic,
        _ => bail!("bad model '{s}' (ordinary | robust[:alpha] | logistic)"),
    };
    model.validate()?;
    Ok(model)
}

/// `m=64,q=64,r=5,s=0.05[,p=5]`.
pub fn parse_synthetic(s: &str) -> anyhow::Result<SyntheticSpec<f64>> {
    let (mut m, mut q, mut r, mut s_val, mut p) = (None, None, None, None, None);
    for item in s.split(',') {
        let Some((key, value)) = item.split_once('=') else {
            bail!("bad synthetic item '{item}' (expected key=value)");
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "m" => m = Some(value.parse::<usize>().context("bad m")?),
            "q" => q = Some(value.parse::<usize>().context("bad q")?),
            "r" => r = Some(value.parse::<usize>().context("bad r")?),
            "s" => s_val = Some(value.parse::<f64>().context("bad s")?),
            "p" => p = Some(value.parse::<usize>().context("bad p")?),
            other => bail!("unknown synthetic key '{other}' (m, q, r, s, p)"),
        }
    }
    let (Some(m), Some(q), Some(r), Some(s_val)) = (m, q, r, s_val) else {
        bail!("synthetic spec needs m, q, r, and s");
    };
    let mut spec = SyntheticSpec::new(m, q, r, s_val);
    if let Some(p) = p {
        spec.p_dim = p;
        spec.gamma_star = vec![1.0; p];
    }
    spec.validate()?;
    Ok(spec)
}

/// Resolved ground-truth signal.
pub struct Signal {
    pub c_star: Mat64,
    pub gamma_star: Vec<f64>,
    /// Label for summaries ("square g=64", "synthetic r=5 s=0.05").
    pub label: String,
}

/// Build the signal from `--shape`/`--synthetic` (exactly one required).
/// Shapes take `γ*` from `gamma_star` (default all-ones length 5); synthetic
/// specs carry their own `γ*`; `--gamma-star` overrides either.
pub fn resolve_signal(
    shape: Option<&str>,
    grid: Option<usize>,
    synthetic: Option<&str>,
    gamma_star: Option<Vec<f64>>,
    seed: u64,
) -> anyhow::Result<Signal> {
    match (shape, synthetic) {
        (Some(_), Some(_)) => bail!("--shape and --synthetic are mutually exclusive"),
        (None, None) => bail!("one of --shape or --synthetic is required"),
        (Some(name), None) => {
            let kind: ShapeKind = name.parse()?;
            let g = grid.unwrap_or(matreg::datagen::DEFAULT_GRID);
            if g < 8 {
                bail!("shape grid must be at least 8, got {g}");
            }
            let c_star = make_shape(kind, g);
            let gamma_star = gamma_star.unwrap_or_else(|| vec![1.0; 5]);
            Ok(Signal { c_star, gamma_star, label: format!("{} g={g}", kind.name()) })
        }
        (None, Some(spec_str)) => {
            let spec = parse_synthetic(spec_str)?;
            let c_star = make_lowrank_sparse(&spec, seed)?;
            let label = format!("synthetic m={} q={} r={} s={}", spec.m, spec.q, spec.r, spec.s);
            let gamma_star = gamma_star.unwrap_or(spec.gamma_star);
            Ok(Signal { c_star, gamma_star, label })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_specs_parse() {
        assert_eq!(parse_noise("gaussian:2.5").unwrap(), NoiseSpec::Gaussian { sigma: 2.5 });
        assert_eq!(
            parse_noise("contaminated:0.1").unwrap(),
            NoiseSpec::Contaminated { p: 0.1, sigma: 1.0, sigma_out: 100.0 }
        );
        assert_eq!(parse_noise("cauchy").unwrap(), NoiseSpec::Cauchy);
        assert!(parse_noise("gaussian:0").is_err());
        assert!(parse_noise("contaminated:0.9").is_err());
        assert!(parse_noise("pink").is_err());
    }

    #[test]
    fn models_parse() {
        assert_eq!(parse_model("ordinary").unwrap(), LossModel::Ordinary);
        assert_eq!(parse_model("robust:2").unwrap(), LossModel::Robust { alpha: 2.0 });
        assert_eq!(
            parse_model("robust").unwrap(),
            LossModel::Robust { alpha: DEFAULT_ROBUST_ALPHA }
        );
        assert!(parse_model("robust:-1").is_err());
    }

    #[test]
    fn synthetic_parses() {
        let s = parse_synthetic("m=64,q=32,r=5,s=0.05").unwrap();
        assert_eq!((s.m, s.q, s.r, s.p_dim), (64, 32, 5, 5));
        assert!(parse_synthetic("m=64,q=32").is_err());
        assert!(parse_synthetic("m=64,q=32,r=40,s=0.05").is_err());
    }
}
