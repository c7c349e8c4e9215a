use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use deltom::scaling::{AggregationRule, BeamConfig, Ranking, RemoteGeneratorConfig};
use deltom::story::StoryConfig;
use deltom::verifier::{RemoteScorerConfig, VerifierSpec, PBM_3B_ACCURACY, PBM_8B_ACCURACY};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Scripted { q: f64 },
    Remote(RemoteGeneratorConfig),
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec::Scripted { q: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Bon,
    Beam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodSpec {
    pub kind: MethodKind,
    /// Best-of-N sample count.
    pub n: usize,
    /// `None` reports every rule.
    pub rule: Option<AggregationRule>,
    /// `None` reports both rankings.
    pub ranking: Option<Ranking>,
    pub beam: BeamConfig,
}

impl Default for MethodSpec {
    fn default() -> Self {
        MethodSpec {
            kind: MethodKind::Bon,
            n: 16,
            rule: None,
            ranking: None,
            beam: BeamConfig::new(4, 4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptSpec {
    pub template_id: String,
    pub note: String,
}

impl Default for PromptSpec {
    fn default() -> Self {
        PromptSpec {
            template_id: "one_shot_v1".into(),
            note: String::new(),
        }
    }
}

/// Everything a run depends on; echoed into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub story: StoryConfig,
    pub prompt: PromptSpec,
    pub verifier: VerifierSpec,
    pub generator: GeneratorSpec,
    pub method: MethodSpec,
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            story: StoryConfig::default(),
            prompt: PromptSpec::default(),
            verifier: VerifierSpec::Exact,
            generator: GeneratorSpec::default(),
            method: MethodSpec::default(),
            out: PathBuf::from("out"),
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.story.validate()?;
        self.verifier.validate()?;
        if deltom::trace::template(&self.prompt.template_id).is_none() {
            bail!("unknown prompt template `{}`", self.prompt.template_id);
        }
        match &self.generator {
            GeneratorSpec::Scripted { q } if !(0.0..=1.0).contains(q) => bail!("scripted q = {q} outside [0, 1]"),
            GeneratorSpec::Remote(r) if r.url.is_empty() => bail!("remote generator needs a url"),
            _ => {}
        }
        if self.method.n == 0 {
            bail!("N must be at least 1");
        }
        if self.method.beam.k == 0 || self.method.beam.b == 0 {
            bail!("beam k and b must be at least 1");
        }
        Ok(())
    }
}

/// `exact`, `noisy8b`, `noisy3b`, `noisy:a0,a1,a2,a3,a4` or `remote:URL`.
pub fn parse_verifier(s: &str, seed: u64) -> Result<VerifierSpec> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    Ok(match kind {
        "exact" => VerifierSpec::Exact,
        "noisy8b" => VerifierSpec::Noisy {
            accuracy: PBM_8B_ACCURACY,
            seed,
        },
        "noisy3b" => VerifierSpec::Noisy {
            accuracy: PBM_3B_ACCURACY,
            seed,
        },
        "noisy" => {
            let v: Vec<f64> = arg
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| anyhow!("bad accuracy list `{arg}`: {e}"))?;
            let accuracy: [f64; 5] = v
                .try_into()
                .map_err(|_| anyhow!("noisy verifier needs five accuracies (orders 0-4)"))?;
            VerifierSpec::Noisy { accuracy, seed }
        }
        "remote" if !arg.is_empty() => VerifierSpec::Remote(RemoteScorerConfig {
            url: arg.to_string(),
            timeout_ms: 30_000,
        }),
        _ => bail!("unknown verifier `{s}`"),
    })
}

/// `scripted:q=0.9` or `remote:URL[,model=NAME]`.
pub fn parse_generator(s: &str) -> Result<GeneratorSpec> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    match kind {
        "scripted" => {
            let q = arg
                .split(',')
                .find_map(|kv| kv.trim().strip_prefix("q="))
                .ok_or_else(|| anyhow!("scripted generator needs q=<prob>"))?;
            Ok(GeneratorSpec::Scripted {
                q: q.parse().map_err(|e| anyhow!("bad q `{q}`: {e}"))?,
            })
        }
        "remote" => {
            let mut parts = arg.split(',');
            let url = parts.next().unwrap_or_default().to_string();
            let mut cfg = RemoteGeneratorConfig {
                url,
                ..RemoteGeneratorConfig::default()
            };
            for kv in parts {
                match kv.split_once('=') {
                    Some(("model", m)) => cfg.model = m.to_string(),
                    Some(("temperature", t)) => cfg.temperature = t.parse()?,
                    _ => bail!("unknown remote generator option `{kv}`"),
                }
            }
            Ok(GeneratorSpec::Remote(cfg))
        }
        _ => bail!("unknown generator `{s}`"),
    }
}
