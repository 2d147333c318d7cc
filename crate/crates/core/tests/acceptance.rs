//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::f64::consts::TAU;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use futures::{SinkExt, StreamExt};
use rand::Rng;
use serde_json::{json, Value};
use tokio_tungstenite::tungstenite::Message;

use beas::bspline::{basis, BSplineContour};
use beas::geometry::{sample_contour, PolarFrame};
use beas::interaction::{anchor_gradient, compound_gradient, AnchorPoint, EnergyWeights};
use beas::phantom::{disk_image, generate_phantom, PhantomConfig};
use beas::region::{energy_gradient, evolve, EvolveParams};
use beas::service::server::spawn;
use beas::service::SessionHub;
use beas::{interactive_step, open_session, Config, ProbabilityMap};
use common::*;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn p95(mut ms: Vec<f64>) -> f64 {
    ms.sort_by(f64::total_cmp);
    let i = ((ms.len() as f64 * 0.95).ceil() as usize).max(1) - 1;
    ms[i]
}

fn basis_correctness() -> Verdict {
    let mut rng = rng(2024);
    let mut worst = [0.0f64; 3];
    for d in 0..=3u8 {
        let half = (d as f64 + 1.0) / 2.0;
        for _ in 0..10_000 {
            let x: f64 = rng.random_range(-4.0..4.0);
            let sum: f64 = (-6..=6).map(|k| basis(x - k as f64, d).unwrap()).sum();
            worst[0] = worst[0].max((sum - 1.0).abs());
            worst[1] = worst[1].max((basis(x, d).unwrap() - basis(-x, d).unwrap()).abs());
            let b = basis(x, d).unwrap();
            if x.abs() >= half || b < 0.0 {
                worst[2] = worst[2].max(b.abs());
            }
        }
    }
    let conv = (basis(0.0, 3).unwrap() - convolution_basis(0.0, 3)).abs();
    verdict(
        worst.iter().all(|&w| w <= 1e-12) && conv <= 1e-9,
        format!(
            "partition {:.1e}, symmetry {:.1e}, support {:.1e}, cubic(0) vs convolution {:.1e}",
            worst[0], worst[1], worst[2], conv
        ),
    )
}

fn gradient_fidelity() -> Verdict {
    let mut rng = rng(77);

    let mut dense = 0.0f64;
    for _ in 0..20 {
        let coefs: Vec<f64> = (0..32).map(|_| rng.random_range(10.0..30.0)).collect();
        let c = BSplineContour::new(coefs, 3).unwrap();
        let frame = PolarFrame {
            origin: [40.0, 40.0],
            initial_radius: 20.0,
        };
        let s = sample_contour(&c, &frame, 128).unwrap();
        let g: Vec<f64> = (0..s.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = energy_gradient(&g, &c, &s).unwrap();
        let want = dense_gradient(&g, &s.thetas, 32, 3);
        for (a, b) in got.values().iter().zip(&want) {
            dense = dense.max((a - b).abs());
        }
    }

    let mut fd_rel = 0.0f64;
    for _ in 0..20 {
        let coefs: Vec<f64> = (0..32).map(|_| rng.random_range(15.0..40.0)).collect();
        let c = BSplineContour::new(coefs.clone(), 3).unwrap();
        let anchors: Vec<AnchorPoint> = (0..3)
            .map(|id| AnchorPoint {
                id,
                rho: rng.random_range(10.0..50.0),
                theta: rng.random_range(0.0..TAU),
            })
            .collect();
        let energy = |cs: &[f64]| -> f64 {
            anchors
                .iter()
                .map(|a| (dense_eval(cs, 3, a.theta) - a.rho).powi(2))
                .sum()
        };
        let grad = anchor_gradient(&c, &anchors);
        let h = 1e-5;
        for k in 0..32 {
            let (mut up, mut down) = (coefs.clone(), coefs.clone());
            up[k] += h;
            down[k] -= h;
            let fd = (energy(&up) - energy(&down)) / (2.0 * h);
            let g = grad.values()[k];
            fd_rel = fd_rel.max((g - fd).abs() / g.abs().max(fd.abs()).max(1.0));
        }
    }

    let image = smooth_random_image(9, (64, 64));
    let prob = ProbabilityMap::new(disk((64, 64), [32.0, 31.0], 14.0)).unwrap();
    let contour =
        BSplineContour::new((0..32).map(|k| 14.0 + (k as f64 * 0.3).sin()).collect(), 3).unwrap();
    let frame = PolarFrame {
        origin: [32.0, 32.0],
        initial_radius: 14.0,
    };
    let mut linear = 0.0f64;
    for _ in 0..20 {
        let theta = rng.random_range(0.0..TAU);
        let anchors = [AnchorPoint {
            id: 1,
            rho: contour.evaluate(theta) + rng.random_range(-8.0..8.0),
            theta,
        }];
        let w = |r: &mut rand_chacha::ChaCha8Rng| EnergyWeights {
            alpha: r.random_range(0.0..2.0),
            beta: r.random_range(0.0..2.0),
            gamma: r.random_range(0.01..5.0),
        };
        let (w1, w2) = (w(&mut rng), w(&mut rng));
        let sum = EnergyWeights {
            alpha: w1.alpha + w2.alpha,
            beta: w1.beta + w2.beta,
            gamma: w1.gamma + w2.gamma,
        };
        let grad = |w: &EnergyWeights| {
            compound_gradient(&contour, &frame, &image, &prob, &anchors, w, 10.0, 4).unwrap()
        };
        let (a, b, s) = (grad(&w1), grad(&w2), grad(&sum));
        for k in 0..32 {
            linear = linear.max((s.values()[k] - a.values()[k] - b.values()[k]).abs());
        }
    }

    verdict(
        dense <= 1e-12 && fd_rel <= 1e-6 && linear <= 1e-12,
        format!("dense quadrature {dense:.1e}, anchor FD {fd_rel:.1e} rel, linearity {linear:.1e}"),
    )
}

fn disk_recovery() -> Verdict {
    let (center, radius) = ([63.4, 64.7], 24.0);
    let image = disk_image((128, 128), center, radius);
    let frame = PolarFrame {
        origin: center,
        initial_radius: radius + 10.0,
    };
    let init = BSplineContour::circle(32, 3, radius + 10.0).unwrap();
    let params = EvolveParams {
        radius: 100.0,
        max_iters: 200,
        ..EvolveParams::default()
    };
    let start = Instant::now();
    let out = evolve(&init, &frame, &image, &params).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let error = sample_thetas(720)
        .iter()
        .map(|&t| (out.contour.evaluate(t) - radius).abs())
        .sum::<f64>()
        / 720.0;
    verdict(
        out.converged && out.iterations <= 200 && error <= 1.0 && secs <= 2.0,
        format!(
            "converged {} in {} iterations, mean radial error {error:.3} px, {secs:.2} s",
            out.converged, out.iterations
        ),
    )
}

fn smoothing_benefit() -> Verdict {
    let report = beas::report::bench(50, 1, &Config::default()).unwrap();
    let a = &report.aggregate;
    verdict(
        a.dice_after.mean >= a.dice_before.mean && a.smoother_fraction >= 0.9,
        format!(
            "mean Dice {:.4} thresholded, {:.4} smoothed; smoother in {:.0}% of cases",
            a.dice_before.mean,
            a.dice_after.mean,
            100.0 * a.smoother_fraction
        ),
    )
}

fn anchor_convergence() -> Verdict {
    let config = Config::default();
    let mut failures = Vec::new();
    let (mut worst, mut most_steps) = (0.0f64, 0);
    for seed in 0..50u64 {
        let p = generate_phantom(seed, 1, &config.phantom).unwrap();
        let mut s = open_session(p.image, p.prob_map, &config).unwrap();
        let theta = (seed as f64 * 2.399).rem_euclid(TAU);
        let sign = if seed % 2 == 0 { 1.0 } else { -1.0 };
        let rho = s.contour().evaluate(theta) + sign * 8.0;
        s.add_anchor_polar(rho, theta).unwrap();
        let mut gap = f64::INFINITY;
        for step in 1..=20 {
            interactive_step(&mut s).unwrap();
            gap = (s.contour().evaluate(theta) - rho).abs();
            if gap <= 1.0 {
                most_steps = most_steps.max(step);
                break;
            }
        }
        worst = worst.max(gap);
        if gap > 1.0 {
            failures.push(seed);
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "{} of 50 anchors within 1 px, worst gap {worst:.3} px, at most {most_steps} steps, failing seeds {failures:?}",
            50 - failures.len()
        ),
    )
}

fn step_latency() -> Verdict {
    let mut config = Config::default();
    config.phantom = PhantomConfig {
        size: 256,
        ..config.phantom
    };
    let p = generate_phantom(3, 1, &config.phantom).unwrap();
    let mut s = open_session(p.image, p.prob_map, &config).unwrap();
    let mut rng = rng(99);
    let mut ms = Vec::with_capacity(100);
    for _ in 0..100 {
        let theta = rng.random_range(0.0..TAU);
        let rho = s.contour().evaluate(theta) + rng.random_range(-8.0..8.0);
        if s.anchors().len() >= 4 {
            let oldest = s.anchors().as_slice()[0].id;
            s.remove_anchor(oldest).unwrap();
        }
        s.add_anchor_polar(rho, theta).unwrap();
        let t = Instant::now();
        interactive_step(&mut s).unwrap();
        ms.push(t.elapsed().as_secs_f64() * 1e3);
    }
    let (p, max) = (p95(ms.clone()), ms.iter().cloned().fold(0.0, f64::max));
    verdict(
        p <= 50.0,
        format!("256x256, N=32, R=10: p95 {p:.1} ms, max {max:.1} ms over 100 edits"),
    )
}

async fn start_server() -> SocketAddr {
    let hub = Arc::new(SessionHub::new(Config::default(), Duration::from_secs(600)));
    spawn("127.0.0.1:0".parse().unwrap(), hub).await.unwrap()
}

async fn call(
    ws: &mut tokio_tungstenite::WebSocketStream<
        tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>,
    >,
    msg: &Value,
) -> Value {
    ws.send(Message::text(msg.to_string())).await.unwrap();
    loop {
        if let Message::Text(t) = ws.next().await.unwrap().unwrap() {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

async fn connect(
    addr: SocketAddr,
) -> tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<tokio::net::TcpStream>> {
    tokio_tungstenite::connect_async(format!("ws://{addr}/ws"))
        .await
        .unwrap()
        .0
}

/// Drives a session over the service with random anchor edits. Returns the
/// round-trip times of the edits, the messages sent and the final export.
async fn record_session(addr: SocketAddr) -> (Vec<f64>, Vec<Value>, Value) {
    let mut ws = connect(addr).await;
    let mut log = vec![
        json!({"kind": "open", "source": {"type": "phantom", "seed": 3, "corruption": 1, "size": 256}}),
    ];
    let opened = call(&mut ws, &log[0]).await;
    let id = opened["session_id"].as_str().unwrap().to_owned();
    let origin = [
        opened["contour"]["origin"][0].as_f64().unwrap(),
        opened["contour"]["origin"][1].as_f64().unwrap(),
    ];
    let mut contour = opened["contour"].clone();
    let mut rng = rng(5);
    let mut ms = Vec::new();
    let mut live: Vec<u64> = Vec::new();
    for _ in 0..100 {
        let doc: beas::io::ContourDocument = serde_json::from_value(contour.clone()).unwrap();
        let theta = rng.random_range(0.0..TAU);
        let rho = doc.contour().unwrap().evaluate(theta) + rng.random_range(-8.0..8.0);
        let (x, y) = (origin[0] + rho * theta.cos(), origin[1] + rho * theta.sin());
        let msg = if live.len() >= 3 && rng.random_bool(0.3) {
            let id_a = live[rng.random_range(0..live.len())];
            json!({"kind": "move_anchor", "session_id": id, "anchor_id": id_a, "x": x, "y": y})
        } else if live.len() >= 4 {
            let id_a = live.remove(0);
            json!({"kind": "remove_anchor", "session_id": id, "anchor_id": id_a})
        } else {
            json!({"kind": "add_anchor", "session_id": id, "x": x, "y": y})
        };
        let t = Instant::now();
        let reply = call(&mut ws, &msg).await;
        ms.push(t.elapsed().as_secs_f64() * 1e3);
        assert_eq!(reply["kind"], "state", "{msg} -> {reply}");
        live = reply["anchors"]
            .as_array()
            .unwrap()
            .iter()
            .map(|a| a["id"].as_u64().unwrap())
            .collect();
        contour = reply["contour"].clone();
        log.push(msg);
    }
    let export = json!({"kind": "export", "session_id": id});
    log.push(export.clone());
    let out = call(&mut ws, &export).await;
    (ms, log, out)
}

async fn replay(addr: SocketAddr, log: &[Value]) -> Value {
    let mut ws = connect(addr).await;
    let mut last = Value::Null;
    for msg in log {
        last = call(&mut ws, msg).await;
    }
    last
}

fn main() {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .unwrap();
    let (round_trip, log, recorded) = runtime.block_on(async {
        let addr = start_server().await;
        record_session(addr).await
    });
    let replays: Vec<Value> = (0..2)
        .map(|_| runtime.block_on(async { replay(start_server().await, &log).await }))
        .collect();

    let mut results: Vec<(&str, Verdict)> = vec![
        ("basis correctness", basis_correctness()),
        ("gradient fidelity", gradient_fidelity()),
        ("disk recovery", disk_recovery()),
        ("smoothing benefit", smoothing_benefit()),
        ("anchor convergence", anchor_convergence()),
    ];
    let step = step_latency();
    let rt = p95(round_trip.clone());
    let realtime_pass = step.pass && rt <= 100.0;
    results.push((
        "real-time contract",
        verdict(
            realtime_pass,
            format!("{}; loopback round trip p95 {rt:.1} ms", step.detail),
        ),
    ));
    let same = recorded["kind"] == "export"
        && replays
            .iter()
            .all(|r| serde_json::to_vec(r).unwrap() == serde_json::to_vec(&recorded).unwrap());
    results.push((
        "deterministic replay",
        verdict(
            same,
            format!(
                "{} messages replayed on 2 fresh servers, export identical: {same}",
                log.len()
            ),
        ),
    ));

    let mut failed = 0;
    for (name, v) in &results {
        println!(
            "{} {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += !v.pass as usize;
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
