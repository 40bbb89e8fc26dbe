//! Run configuration: `[section]` headers, `key = value` lines, `#` comments.
//!
//! Every value remembers its line so validation errors point at the input.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fractal_ap::Mode;
use fractal_ap::measure::{CantorParams, KMode};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub file: String,
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.file, self.message)
        } else {
            write!(f, "{}:{}: {}", self.file, self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

/// Parsed but untyped document.
#[derive(Debug, Clone, PartialEq)]
pub struct Ini {
    file: String,
    sections: Vec<Section>,
}

impl Ini {
    pub fn parse(file: &str, text: &str) -> Result<Self, ConfigError> {
        let err = |line, message: String| ConfigError {
            file: file.to_string(),
            line,
            message,
        };
        let mut sections: Vec<Section> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, format!("unterminated section header '{body}'")))?
                    .trim();
                if name.is_empty() {
                    return Err(err(line, "empty section name".into()));
                }
                if let Some(prev) = sections.iter().find(|s| s.name == name) {
                    return Err(err(line, format!("section [{name}] already opened on line {}", prev.line)));
                }
                sections.push(Section {
                    name: name.to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected 'key = value', found '{body}'")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(err(line, "missing key before '='".into()));
            }
            let section = sections
                .last_mut()
                .ok_or_else(|| err(line, format!("'{key}' appears before any [section] header")))?;
            if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
                return Err(err(line, format!("duplicate key '{key}' (first set on line {})", prev.line)));
            }
            section.entries.push(Entry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(Self {
            file: file.to_string(),
            sections,
        })
    }

    fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    fn error(&self, line: usize, message: impl Into<String>) -> ConfigError {
        ConfigError {
            file: self.file.clone(),
            line,
            message: message.into(),
        }
    }
}

/// Typed access to one section, rejecting keys nobody asked for.
struct Reader<'a> {
    ini: &'a Ini,
    name: &'static str,
    section: Option<&'a Section>,
    seen: Vec<&'static str>,
}

impl<'a> Reader<'a> {
    fn new(ini: &'a Ini, name: &'static str) -> Self {
        Self {
            ini,
            name,
            section: ini.section(name),
            seen: Vec::new(),
        }
    }

    fn present(&self) -> bool {
        self.section.is_some()
    }

    fn header_line(&self) -> usize {
        self.section.map_or(0, |s| s.line)
    }

    fn entry(&mut self, key: &'static str) -> Option<&'a Entry> {
        self.seen.push(key);
        self.section?.entries.iter().find(|e| e.key == key)
    }

    fn opt<T: FromStr>(&mut self, key: &'static str) -> Result<Option<(T, usize)>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.entry(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<T>().map(|v| Some((v, e.line))).map_err(|err| {
                self.ini
                    .error(e.line, format!("[{}] {key} = '{}': {err}", self.name, e.value))
            }),
        }
    }

    fn or<T: FromStr>(&mut self, key: &'static str, default: T) -> Result<(T, usize), ConfigError>
    where
        T::Err: fmt::Display,
    {
        let header = self.header_line();
        Ok(self.opt(key)?.unwrap_or((default, header)))
    }

    fn required<T: FromStr>(&mut self, key: &'static str) -> Result<(T, usize), ConfigError>
    where
        T::Err: fmt::Display,
    {
        let header = self.header_line();
        self.opt(key)?
            .ok_or_else(|| self.ini.error(header, format!("[{}] is missing required key '{key}'", self.name)))
    }

    fn list<T: FromStr>(&mut self, key: &'static str) -> Result<Option<(Vec<T>, usize)>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(e) = self.entry(key) else {
            return Ok(None);
        };
        let items = e
            .value
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>()
                    .map_err(|err| self.ini.error(e.line, format!("[{}] {key}: '{s}': {err}", self.name)))
            })
            .collect::<Result<Vec<T>, _>>()?;
        Ok(Some((items, e.line)))
    }

    /// Errors on the first key that was never read.
    fn finish(self) -> Result<(), ConfigError> {
        if let Some(s) = self.section {
            if let Some(e) = s.entries.iter().find(|e| !self.seen.contains(&e.key.as_str())) {
                return Err(self
                    .ini
                    .error(e.line, format!("unknown key '{}' in [{}]", e.key, self.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Construction {
    Cantor,
    Salem,
    Brownian,
}

impl FromStr for Construction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cantor" => Ok(Self::Cantor),
            "salem" => Ok(Self::Salem),
            "brownian" => Ok(Self::Brownian),
            _ => Err("expected cantor, salem or brownian".into()),
        }
    }
}

/// Steps available to a Cantor run, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Step {
    Fourier,
    CheckAb,
    Lambda,
    Fejer,
    Restriction,
    FindAp,
}

impl Step {
    pub const ALL: [Step; 6] = [
        Step::Fourier,
        Step::CheckAb,
        Step::Lambda,
        Step::Fejer,
        Step::Restriction,
        Step::FindAp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Step::Fourier => "fourier",
            Step::CheckAb => "check-ab",
            Step::Lambda => "lambda",
            Step::Fejer => "fejer",
            Step::Restriction => "restriction",
            Step::FindAp => "find-ap",
        }
    }
}

impl FromStr for Step {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Step::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown step (expected one of {})", Step::ALL.map(Step::name).join(", ")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CantorBlock {
    pub params: CantorParams,
    pub depth: u32,
    pub steps: Vec<Step>,
    pub k_max: u64,
    pub beta: f64,
    pub b: f64,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub cutoff: u64,
    /// Fejér order; `None` uses `2N ≤ k_max/4` from the empirical constant.
    pub fejer_n: Option<u64>,
    pub restriction_trials: usize,
    pub restriction_max_degree: u64,
    pub slack: u64,
    pub max_depth: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SalemBlock {
    pub d: usize,
    pub alpha: f64,
    pub s: f64,
    pub depth: u32,
    pub xi_max: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrownianBlock {
    /// `2` selects the uniform base; smaller values a Cantor base of dimension `alpha/2`.
    pub alpha: f64,
    pub grid_depth: u32,
    pub paths: usize,
    pub xi_list: Vec<f64>,
    pub q: f64,
    pub epsilon: Vec<f64>,
    pub closed_samples: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    Cantor(CantorBlock),
    Salem(SalemBlock),
    Brownian(BrownianBlock),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub output: PathBuf,
    pub seed: u64,
    pub mode: Mode,
    pub block: Block,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            file: name.clone(),
            line: 0,
            message: format!("cannot read: {e}"),
        })?;
        Self::parse(&name, &text)
    }

    /// Parses and validates; nothing is computed before this succeeds.
    pub fn parse(file: &str, text: &str) -> Result<Self, ConfigError> {
        let ini = Ini::parse(file, text)?;
        let known = ["run", "cantor", "spectral", "find-ap", "salem", "brownian"];
        if let Some(s) = ini.sections.iter().find(|s| !known.contains(&s.name.as_str())) {
            return Err(ini.error(s.line, format!("unknown section [{}]", s.name)));
        }
        let mut run = Reader::new(&ini, "run");
        if !run.present() {
            return Err(ini.error(0, "missing [run] section"));
        }
        let (construction, _) = run.required::<Construction>("construction")?;
        let (output, _) = run.or("output", PathBuf::from("out"))?;
        let (seed, _) = run.or("seed", 42u64)?;
        let (mode, _) = run.or("mode", Mode::Strict)?;
        let steps = run.list::<Step>("steps")?;
        let block = match construction {
            Construction::Cantor => Block::Cantor(cantor_block(&ini, steps)?),
            Construction::Salem | Construction::Brownian => {
                if let Some((_, line)) = steps {
                    return Err(ini.error(line, "steps apply to cantor runs only"));
                }
                if construction == Construction::Salem {
                    Block::Salem(salem_block(&ini)?)
                } else {
                    Block::Brownian(brownian_block(&ini)?)
                }
            }
        };
        run.finish()?;
        // Sections that belong to another construction are mistakes, not noise.
        let used: &[&str] = match block {
            Block::Cantor(_) => &["run", "cantor", "spectral", "find-ap"],
            Block::Salem(_) => &["run", "salem"],
            Block::Brownian(_) => &["run", "brownian"],
        };
        if let Some(s) = ini.sections.iter().find(|s| !used.contains(&s.name.as_str())) {
            return Err(ini.error(s.line, format!("section [{}] does not apply to this construction", s.name)));
        }
        Ok(Self {
            output,
            seed,
            mode,
            block,
        })
    }
}

fn cantor_block(ini: &Ini, steps: Option<(Vec<Step>, usize)>) -> Result<CantorBlock, ConfigError> {
    let mut c = Reader::new(ini, "cantor");
    if !c.present() {
        return Err(ini.error(0, "cantor runs need a [cantor] section"));
    }
    let (n0, n0_line) = c.required::<u64>("n0")?;
    let (t0, _) = c.required::<u64>("t0")?;
    let (n, _) = c.or("n", 1u32)?;
    let (k_mode, _) = c.or("k_mode", KMode::Unit)?;
    let (depth, depth_line) = c.required::<u32>("depth")?;
    c.finish()?;
    let params = CantorParams::new(n0, t0, n, k_mode).map_err(|e| ini.error(n0_line, e.to_string()))?;
    if depth == 0 {
        return Err(ini.error(depth_line, "depth must be at least 1"));
    }
    params
        .modulus(depth)
        .and_then(|_| params.cell_count(depth))
        .map_err(|e| ini.error(depth_line, e.to_string()))?;

    let steps = match steps {
        Some((mut s, _)) => {
            s.sort();
            s.dedup();
            s
        }
        None => Step::ALL.to_vec(),
    };
    let mut sp = Reader::new(ini, "spectral");
    let (cutoff, cutoff_line) = sp.or("cutoff", 1024u64)?;
    let (k_max, k_max_line) = sp.or("k_max", 2 * cutoff)?;
    let (beta, beta_line) = sp.or("beta", 0.8f64)?;
    let (b, _) = sp.or("b", 0.0f64)?;
    let c1 = sp.opt::<f64>("c1")?;
    let c2 = sp.opt::<f64>("c2")?;
    let fejer_n = sp.opt::<u64>("fejer_n")?;
    let (restriction_trials, trials_line) = sp.or("restriction_trials", 16usize)?;
    let (restriction_max_degree, degree_line) = sp.or("restriction_max_degree", 1024u64)?;
    sp.finish()?;

    let alpha = params.alpha();
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ini.error(n0_line, format!("alpha = ln t0 / ln N0 = {alpha} must lie in (0, 1)")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(ini.error(beta_line, "beta must be positive"));
    }
    let wants = |s: Step| steps.contains(&s);
    if (wants(Step::Lambda) || wants(Step::Fejer)) && beta <= 2.0 / 3.0 {
        return Err(ini.error(
            beta_line,
            format!("beta = {beta}: the lambda and fejer steps require beta > 2/3 for the series to converge"),
        ));
    }
    if k_max == 0 {
        return Err(ini.error(k_max_line, "k_max must be at least 1"));
    }
    if wants(Step::Lambda) && (cutoff == 0 || 2 * cutoff > k_max) {
        return Err(ini.error(
            cutoff_line,
            format!("cutoff = {cutoff} must satisfy 1 ≤ 2·cutoff ≤ k_max = {k_max}"),
        ));
    }
    for (v, name) in [(c1, "c1"), (c2, "c2")] {
        if let Some((v, line)) = v {
            if !(v > 0.0) {
                return Err(ini.error(line, format!("{name} must be positive")));
            }
        }
    }
    if let Some((n, line)) = fejer_n {
        if n == 0 || 4 * n > k_max {
            return Err(ini.error(line, format!("fejer_n = {n} must satisfy 1 ≤ 4·fejer_n ≤ k_max = {k_max}")));
        }
    }
    if wants(Step::Restriction) {
        if restriction_trials == 0 {
            return Err(ini.error(trials_line, "restriction_trials must be at least 1"));
        }
        if restriction_max_degree < 2 {
            return Err(ini.error(degree_line, "restriction_max_degree must be at least 2"));
        }
        fractal_ap::spectral::restriction_exponents(alpha, beta).map_err(|e| ini.error(beta_line, e.to_string()))?;
    }

    let mut ap = Reader::new(ini, "find-ap");
    let (slack, _) = ap.or("slack", 2u64)?;
    let (max_depth, max_depth_line) = ap.or("max_depth", depth)?;
    ap.finish()?;
    if max_depth == 0 || max_depth > depth {
        return Err(ini.error(
            max_depth_line,
            format!("max_depth = {max_depth} must lie in 1..={depth} (the construction depth)"),
        ));
    }
    Ok(CantorBlock {
        params,
        depth,
        steps,
        k_max,
        beta,
        b,
        c1: c1.map(|v| v.0),
        c2: c2.map(|v| v.0),
        cutoff,
        fejer_n: fejer_n.map(|v| v.0),
        restriction_trials,
        restriction_max_degree,
        slack,
        max_depth,
    })
}

fn salem_block(ini: &Ini) -> Result<SalemBlock, ConfigError> {
    let mut r = Reader::new(ini, "salem");
    if !r.present() {
        return Err(ini.error(0, "salem runs need a [salem] section"));
    }
    let (d, d_line) = r.required::<usize>("d")?;
    let (alpha, alpha_line) = r.required::<f64>("alpha")?;
    let (s, s_line) = r.or("s", 6.0f64)?;
    let (depth, depth_line) = r.or("depth", 40u32)?;
    let (xi_max, xi_line) = r.or("xi_max", 256u64)?;
    r.finish()?;
    if d < 2 {
        return Err(ini.error(d_line, "d must be at least 2"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ini.error(alpha_line, "alpha must lie in (0, 1)"));
    }
    if !(s > 0.0) {
        return Err(ini.error(s_line, "s must be positive"));
    }
    if depth == 0 {
        return Err(ini.error(depth_line, "depth must be at least 1"));
    }
    if xi_max == 0 {
        return Err(ini.error(xi_line, "xi_max must be at least 1"));
    }
    Ok(SalemBlock {
        d,
        alpha,
        s,
        depth,
        xi_max,
    })
}

fn brownian_block(ini: &Ini) -> Result<BrownianBlock, ConfigError> {
    let mut r = Reader::new(ini, "brownian");
    if !r.present() {
        return Err(ini.error(0, "brownian runs need a [brownian] section"));
    }
    let (alpha, alpha_line) = r.or("alpha", 2.0f64)?;
    let (grid_depth, g_line) = r.or("grid_depth", 11u32)?;
    let (paths, paths_line) = r.or("paths", 200usize)?;
    let xi_list = r.list::<f64>("xi_list")?;
    let (q, q_line) = r.or("q", 1.0f64)?;
    let epsilon = r.list::<f64>("epsilon")?;
    let (closed_samples, samples_line) = r.or("closed_samples", 100_000u64)?;
    r.finish()?;
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(ini.error(alpha_line, "alpha must lie in (0, 2]"));
    }
    if grid_depth == 0 || grid_depth > fractal_ap::brownian::MAX_GRID_DEPTH {
        return Err(ini.error(
            g_line,
            format!("grid_depth must lie in 1..={}", fractal_ap::brownian::MAX_GRID_DEPTH),
        ));
    }
    if paths < 2 {
        return Err(ini.error(paths_line, "at least two paths are needed for standard errors"));
    }
    let (xi_list, xi_line) = xi_list.unwrap_or((vec![4.0, 16.0, 64.0], r_line(ini)));
    if xi_list.is_empty() || xi_list.iter().any(|&x| !(x != 0.0 && x.is_finite())) {
        return Err(ini.error(xi_line, "xi_list needs nonzero finite frequencies"));
    }
    if !(q > 0.0) {
        return Err(ini.error(q_line, "q must be positive"));
    }
    let (epsilon, eps_line) = epsilon.unwrap_or((vec![0.1, 0.01], r_line(ini)));
    if epsilon.is_empty() || epsilon.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(ini.error(eps_line, "epsilon values must be positive"));
    }
    if closed_samples == 0 {
        return Err(ini.error(samples_line, "closed_samples must be at least 1"));
    }
    Ok(BrownianBlock {
        alpha,
        grid_depth,
        paths,
        xi_list,
        q,
        epsilon,
        closed_samples,
    })
}

fn r_line(ini: &Ini) -> usize {
    ini.section("brownian").map_or(0, |s| s.line)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[run]
construction = cantor
seed = 7

[cantor]
n0 = 16
t0 = 13
depth = 2
";

    #[test]
    fn comments_and_whitespace() {
        let ini = Ini::parse("x", "# top\n[run]  # trailing\n  key =  value with spaces  # c\n").unwrap();
        assert_eq!(ini.sections[0].entries[0].value, "value with spaces");
        assert_eq!(ini.sections[0].entries[0].line, 3);
    }

    #[test]
    fn structural_errors_carry_lines() {
        let e = Ini::parse("f.ini", "[run]\nnonsense\n").unwrap_err();
        assert_eq!((e.line, e.to_string().starts_with("f.ini:2:")), (2, true));
        assert_eq!(Ini::parse("f", "k = v\n").unwrap_err().line, 1);
        assert_eq!(Ini::parse("f", "[a]\nk=1\nk=2\n").unwrap_err().line, 3);
        assert_eq!(Ini::parse("f", "[a]\n[a]\n").unwrap_err().line, 2);
        assert_eq!(Ini::parse("f", "[a\n").unwrap_err().line, 1);
    }

    #[test]
    fn minimal_cantor_defaults() {
        let c = RunConfig::parse("m", MINIMAL).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.mode, Mode::Strict);
        let Block::Cantor(b) = c.block else { panic!() };
        assert_eq!((b.depth, b.max_depth, b.cutoff, b.k_max), (2, 2, 1024, 2048));
        assert_eq!(b.steps, Step::ALL.to_vec());
    }

    #[test]
    fn small_beta_rejected_at_its_line() {
        let text = format!("{MINIMAL}\n[spectral]\nbeta = 0.5\n");
        let e = RunConfig::parse("m", &text).unwrap_err();
        assert_eq!(e.line, 11);
        assert!(e.message.contains("2/3"), "{}", e.message);
        // Without the lambda and fejer steps a small beta is fine.
        let text = text.replace("seed = 7", "seed = 7\nsteps = fourier, check-ab");
        assert!(RunConfig::parse("m", &text).is_ok());
    }

    #[test]
    fn unknown_keys_and_sections() {
        let e = RunConfig::parse("m", &format!("{MINIMAL}dpeth = 3\n")).unwrap_err();
        assert_eq!(e.line, 9);
        assert!(e.message.contains("dpeth"));
        let e = RunConfig::parse("m", &format!("{MINIMAL}[salem]\nd = 2\n")).unwrap_err();
        assert_eq!(e.line, 9);
        let e = RunConfig::parse("m", &format!("{MINIMAL}[extra]\n")).unwrap_err();
        assert!(e.message.contains("unknown section"));
    }

    #[test]
    fn bad_values() {
        let e = RunConfig::parse("m", &MINIMAL.replace("t0 = 13", "t0 = x")).unwrap_err();
        assert_eq!(e.line, 7);
        let e = RunConfig::parse("m", &MINIMAL.replace("t0 = 13", "t0 = 16")).unwrap_err();
        assert!(e.message.contains("alpha"), "{}", e.message);
        let e = RunConfig::parse("m", &MINIMAL.replace("depth = 2", "depth = 0")).unwrap_err();
        assert_eq!(e.line, 8);
        let e = RunConfig::parse("m", &format!("{MINIMAL}[spectral]\ncutoff = 100\nk_max = 150\n")).unwrap_err();
        assert_eq!(e.line, 10);
        let e = RunConfig::parse("m", &format!("{MINIMAL}[find-ap]\nmax_depth = 3\n")).unwrap_err();
        assert_eq!(e.line, 10);
    }

    #[test]
    fn salem_and_brownian_blocks() {
        let c = RunConfig::parse("s", "[run]\nconstruction = salem\n[salem]\nd = 8\nalpha = 0.95\n").unwrap();
        assert!(matches!(c.block, Block::Salem(SalemBlock { d: 8, depth: 40, .. })));
        let e = RunConfig::parse("s", "[run]\nconstruction = salem\n[salem]\nd = 1\nalpha = 0.5\n").unwrap_err();
        assert_eq!(e.line, 4);
        let c = RunConfig::parse(
            "b",
            "[run]\nconstruction = brownian\n[brownian]\nxi_list = 4, 16\nepsilon = 0.1\n",
        )
        .unwrap();
        let Block::Brownian(b) = c.block else { panic!() };
        assert_eq!((b.xi_list, b.epsilon), (vec![4.0, 16.0], vec![0.1]));
        let e = RunConfig::parse("b", "[run]\nconstruction = brownian\n[brownian]\nepsilon = 0.1, -1\n").unwrap_err();
        assert_eq!(e.line, 4);
    }
}
