//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 file or format, 3 dimension or
//! invariant, 4 numerical.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::{run_bench, BenchOptions, BenchReport};
use crate::crypto::{decrypt, decrypt_grid, encrypt};
use crate::error::{Error, Result};
use crate::formats::{read_gikey, read_gimat, read_pgm, write_gikey, write_gimat, write_pgm};
use crate::forward::{add_noise, Ciphertext, ImageGray};
use crate::keys::{keygen, Variant};
use crate::linalg::{Mat, TruncationRate};
use crate::metrics::MetricsReport;

pub const EXIT_USAGE: i32 = 1;

/// Offset from `--seed` to the seed of the noise generator in `simulate`.
/// Keeps the noise independent of the four key sub-seeds.
pub const SIMULATE_NOISE_SEED_OFFSET: u64 = 4;

#[derive(Debug, Parser)]
#[command(name = "ghost-kron", version, about = "Kronecker-factored computational ghost imaging")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a key: binary speckle factors, permutations and variant.
    Keygen(KeygenArgs),
    /// Encrypt a PGM image into a ciphertext matrix.
    Encrypt(EncryptArgs),
    /// Decrypt a ciphertext matrix into a PGM image.
    Decrypt(DecryptArgs),
    /// Key generation, encryption, optional noise, decryption and scoring in one go.
    Simulate(SimulateArgs),
    /// Compare two PGM images (MSE, PSNR, SSIM).
    Metrics(MetricsArgs),
    /// Time the factored against the full pseudo-inverse path.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub m1: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub m2: u64,
    #[arg(long, value_parser = parse_probability)]
    pub p: f64,
    #[arg(long, value_parser = clap::value_parser!(i64).range(1..=4))]
    pub variant: i64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EncryptArgs {
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Gaussian noise on the bucket signals, relative to their mean magnitude.
    #[arg(long, default_value_t = 0.0, value_parser = parse_sigma)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
}

#[derive(Debug, Args)]
pub struct DecryptArgs {
    #[arg(long)]
    pub key: PathBuf,
    #[arg(long)]
    pub cipher: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Fraction of singular values of L kept.
    #[arg(long, default_value_t = 1.0, value_parser = parse_rate)]
    pub r1: f64,
    /// Fraction of singular values of R kept.
    #[arg(long, default_value_t = 1.0, value_parser = parse_rate)]
    pub r2: f64,
    /// Also write the plain reconstruction and all four variant decryptions here.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Also write the unclamped reconstruction as a matrix.
    #[arg(long)]
    pub out_mat: Option<PathBuf>,
    /// Map the reconstruction's [min, max] onto [0, 1] instead of clipping.
    #[arg(long)]
    pub rescale: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Image width; taken from --image when omitted.
    #[arg(long, required_unless_present = "image", value_parser = clap::value_parser!(u64).range(2..))]
    pub width: Option<u64>,
    /// Image height; taken from --image when omitted.
    #[arg(long, required_unless_present = "image", value_parser = clap::value_parser!(u64).range(2..))]
    pub height: Option<u64>,
    #[arg(long, value_parser = parse_probability)]
    pub p: f64,
    #[arg(long, value_parser = clap::value_parser!(i64).range(1..=4))]
    pub variant: i64,
    #[arg(long)]
    pub seed: u64,
    /// Object to image; without it a built-in two-rectangle chart is used.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0, value_parser = parse_sigma)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_rate)]
    pub r1: f64,
    #[arg(long, default_value_t = 1.0, value_parser = parse_rate)]
    pub r2: f64,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Score only the region `x,y,w,h` (pixels, origin top left).
    #[arg(long, value_parser = parse_crop)]
    pub crop: Option<Crop>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub m1: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub m2: u64,
    #[arg(long, default_value_t = 0.2, value_parser = parse_probability)]
    pub p: f64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(3..))]
    pub repeats: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the CSV header and row to this file as well.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Additionally time the two factor pseudo-inverses on two threads.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crop {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

fn parse_unit_interval(s: &str, lo_open: bool) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    let ok = if lo_open { v > 0.0 && v <= 1.0 } else { (0.0..=1.0).contains(&v) };
    if ok {
        Ok(v)
    } else if lo_open {
        Err(format!("{v} is outside (0, 1]"))
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn parse_rate(s: &str) -> std::result::Result<f64, String> {
    parse_unit_interval(s, true)
}

fn parse_probability(s: &str) -> std::result::Result<f64, String> {
    parse_unit_interval(s, false)
}

fn parse_sigma(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{v} must be finite and non-negative"))
    }
}

fn parse_crop(s: &str) -> std::result::Result<Crop, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("`{s}` is not x,y,w,h"))?;
    match parts[..] {
        [x, y, w, h] if w > 0 && h > 0 => Ok(Crop { x, y, w, h }),
        [_, _, _, _] => Err("crop width and height must be positive".into()),
        _ => Err(format!("`{s}` is not x,y,w,h")),
    }
}

fn rate(v: f64) -> Result<TruncationRate> {
    TruncationRate::new(v)
}

fn to_usize(v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::Size(format!("{v} does not fit in usize")))
}

fn to_image(m: &Mat, rescale: bool) -> ImageGray {
    if rescale {
        ImageGray::from_mat_rescaled(m)
    } else {
        ImageGray::from_mat_clamped(m)
    }
}

fn run_keygen(a: &KeygenArgs) -> Result<()> {
    let key = keygen(to_usize(a.m1)?, to_usize(a.m2)?, a.p, Variant::try_from(a.variant)?, a.seed)?;
    write_gikey(&key, &a.out)?;
    println!("wrote {}x{} key (variant {}) to {}", a.m1, a.m2, key.variant(), a.out.display());
    Ok(())
}

fn run_encrypt(a: &EncryptArgs) -> Result<()> {
    let key = read_gikey(&a.key)?;
    let img = read_pgm(&a.image)?;
    let mut ct = encrypt(&img.to_mat(), &key)?;
    if a.noise_sigma > 0.0 {
        ct = add_noise(&ct, a.noise_sigma, &mut ChaCha8Rng::seed_from_u64(a.noise_seed))?;
    }
    write_gimat(ct.mat(), &a.out)?;
    println!("wrote {}x{} ciphertext to {}", ct.mat().rows(), ct.mat().cols(), a.out.display());
    Ok(())
}

/// File names written by `decrypt --grid`, in [`decrypt_grid`] order.
pub const GRID_FILES: [&str; 5] = ["plain.pgm", "variant1.pgm", "variant2.pgm", "variant3.pgm", "variant4.pgm"];

fn run_decrypt(a: &DecryptArgs) -> Result<()> {
    let key = read_gikey(&a.key)?;
    let ct = Ciphertext(read_gimat(&a.cipher)?);
    let (r1, r2) = (rate(a.r1)?, rate(a.r2)?);
    let rec = decrypt(&ct, &key, r1, r2)?;
    write_pgm(&to_image(&rec, a.rescale), &a.out)?;
    if let Some(path) = &a.out_mat {
        write_gimat(&rec, path)?;
    }
    if let Some(dir) = &a.grid {
        std::fs::create_dir_all(dir)?;
        for (m, name) in decrypt_grid(&ct, &key, r1, r2)?.iter().zip(GRID_FILES) {
            write_pgm(&to_image(m, a.rescale), dir.join(name))?;
        }
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let img = match &a.image {
        Some(path) => {
            let img = read_pgm(path)?;
            let want = (a.height.map(to_usize).transpose()?, a.width.map(to_usize).transpose()?);
            if want.0.is_some_and(|h| h != img.height()) || want.1.is_some_and(|w| w != img.width()) {
                return Err(Error::Dimension(format!(
                    "--height/--width disagree with the {}x{} image",
                    img.height(),
                    img.width()
                )));
            }
            img
        }
        None => {
            let (Some(h), Some(w)) = (a.height, a.width) else {
                return Err(Error::Invariant("--width and --height are required without --image".into()));
            };
            ImageGray::test_chart(to_usize(h)?, to_usize(w)?)?
        }
    };
    let (r1, r2) = (rate(a.r1)?, rate(a.r2)?);
    let key = keygen(img.height(), img.width(), a.p, Variant::try_from(a.variant)?, a.seed)?;
    let mut ct = encrypt(&img.to_mat(), &key)?;
    if a.noise_sigma > 0.0 {
        let seed = a.seed.wrapping_add(SIMULATE_NOISE_SEED_OFFSET);
        ct = add_noise(&ct, a.noise_sigma, &mut ChaCha8Rng::seed_from_u64(seed))?;
    }
    let rec = decrypt(&ct, &key, r1, r2)?;
    println!("{}", MetricsReport::compute(&img, &rec)?);
    Ok(())
}

fn run_metrics(a: &MetricsArgs) -> Result<()> {
    let mut reference = read_pgm(&a.reference)?;
    let mut test = read_pgm(&a.test)?;
    if let Some(c) = a.crop {
        reference = reference.crop(c.x, c.y, c.w, c.h)?;
        test = test.crop(c.x, c.y, c.w, c.h)?;
    }
    println!("{}", MetricsReport::compute(&reference, &test)?);
    Ok(())
}

fn run_bench_cmd(a: &BenchArgs) -> Result<()> {
    let opts = BenchOptions {
        m1: to_usize(a.m1)?,
        m2: to_usize(a.m2)?,
        p: a.p,
        repeats: to_usize(a.repeats)?,
        seed: a.seed,
        parallel: a.parallel,
    };
    let report = run_bench(&opts)?;
    let csv = format!("{}\n{}\n", BenchReport::CSV_HEADER, report.csv_row());
    print!("{csv}");
    println!("{}", report.table());
    if let Some(path) = &a.csv {
        std::fs::write(path, csv)?;
    }
    Ok(())
}

/// Runs one parsed command.
pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Keygen(a) => run_keygen(a),
        Command::Encrypt(a) => run_encrypt(a),
        Command::Decrypt(a) => run_decrypt(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Metrics(a) => run_metrics(a),
        Command::Bench(a) => run_bench_cmd(a),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
