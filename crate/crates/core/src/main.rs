use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand};

use beas::config::Config;
use beas::geometry::{rasterize_inside, Mask};
use beas::io::{load_image, save_contour, save_gray8, save_image, save_mask, to_gray8};
use beas::phantom::generate_phantom;
use beas::pipeline::{smooth, ProbabilityMap};
use beas::report::bench;
use beas::service::server::serve;
use beas::service::SessionHub;
use beas::BeasError;

/// Log verbosity, in `env_logger` filter syntax.
const LOG_ENV: &str = "BEAS_LOG";

#[derive(Parser)]
#[command(
    name = "beas",
    version,
    about = "B-spline active contour smoothing and refinement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a smooth contour to a probability map.
    Smooth {
        /// 8-bit PGM or PNG probability map.
        prob_map: PathBuf,
        /// Image to draw the contour on (writes overlay.pgm).
        #[arg(long)]
        image: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a synthetic image, probability map and ground truth.
    Phantom {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        corruption: usize,
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Smooth phantoms for seeds 0..N and write a JSON report.
    Bench {
        #[arg(long)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        corruption: usize,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the session server.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Idle session timeout in seconds.
        #[arg(long, default_value_t = 1800)]
        idle_timeout: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).init();
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(1)
        }
    }
}

fn load_config(path: Option<&Path>) -> beas::Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn create_dir(dir: &Path) -> beas::Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| BeasError::Io {
        path: dir.to_owned(),
        source,
    })
}

fn run(command: Command) -> beas::Result<()> {
    match command {
        Command::Smooth {
            prob_map,
            image,
            config,
            out,
        } => {
            let config = load_config(config.as_deref())?;
            let prob = ProbabilityMap::new(load_image(&prob_map)?)?;
            let s = smooth(&prob, &config)?;
            if s.multiple_components {
                log::warn!("probability map has several large components");
            }
            create_dir(&out)?;
            let mask = rasterize_inside(&s.contour, &s.frame, prob.dim());
            save_contour(&s.contour, &s.frame, &out.join("contour.json"))?;
            save_mask(&mask, &out.join("mask.pgm"))?;
            if let Some(path) = image {
                let img = load_image(&path)?;
                if img.dim() != prob.dim() {
                    return Err(BeasError::InputShape {
                        expected: prob.dim(),
                        actual: img.dim(),
                    });
                }
                let mut pixels = to_gray8(&img);
                for (px, &edge) in pixels.iter_mut().zip(boundary(&mask).iter()) {
                    if edge {
                        *px = 255;
                    }
                }
                save_gray8(&pixels, &out.join("overlay.pgm"))?;
            }
            log::info!("{} iterations, converged: {}", s.iterations, s.converged);
            Ok(())
        }
        Command::Phantom {
            seed,
            corruption,
            out_dir,
            config,
        } => {
            let config = load_config(config.as_deref())?;
            let p = generate_phantom(seed, corruption, &config.phantom)?;
            create_dir(&out_dir)?;
            save_image(&p.image, &out_dir.join("image.pgm"))?;
            save_image(p.prob_map.values(), &out_dir.join("prob.pgm"))?;
            save_mask(&p.truth, &out_dir.join("truth.pgm"))
        }
        Command::Bench {
            seeds,
            corruption,
            report,
            config,
        } => {
            let config = load_config(config.as_deref())?;
            let r = bench(seeds, corruption, &config)?;
            std::fs::write(&report, r.to_json()).map_err(|source| BeasError::Io {
                path: report.clone(),
                source,
            })?;
            println!(
                "{} cases: dice before {:.4}, after {:.4}",
                r.cases.len(),
                r.aggregate.dice_before.mean,
                r.aggregate.dice_after.mean
            );
            Ok(())
        }
        Command::Serve {
            port,
            host,
            idle_timeout,
            config,
        } => {
            let config = load_config(config.as_deref())?;
            let hub = Arc::new(SessionHub::new(config, Duration::from_secs(idle_timeout)));
            let addr = format!("{host}:{port}");
            let io_err = |source| BeasError::Io {
                path: PathBuf::from(&addr),
                source,
            };
            let rt = tokio::runtime::Runtime::new().map_err(io_err)?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr).await?;
                eprintln!("listening on {}", listener.local_addr()?);
                tokio::select! {
                    r = serve(listener, hub) => r,
                    _ = tokio::signal::ctrl_c() => Ok(()),
                }
            })
            .map_err(io_err)
        }
    }
}

/// Inside pixels with a 4-neighbor outside or on the image border.
fn boundary(mask: &Mask) -> Mask {
    let (rows, cols) = mask.dim();
    Mask::from_shape_fn((rows, cols), |(r, c)| {
        mask[[r, c]]
            && (r == 0
                || c == 0
                || r + 1 == rows
                || c + 1 == cols
                || !mask[[r - 1, c]]
                || !mask[[r + 1, c]]
                || !mask[[r, c - 1]]
                || !mask[[r, c + 1]])
    })
}
