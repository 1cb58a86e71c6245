//! Test-side oracles shared by the integration tests. Nothing here calls the
//! library's own rule logic.

#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

/// Hanoi state as the rod (0, 1, 2) of each disk; disk 0 is the smallest.
pub type Positions = Vec<u8>;

pub fn top_disk(s: &[u8], rod: u8) -> Option<usize> {
    s.iter().position(|&r| r == rod)
}

pub fn hanoi_legal(s: &[u8], from: u8, to: u8) -> bool {
    match (top_disk(s, from), top_disk(s, to)) {
        (None, _) => false,
        (Some(_), None) => true,
        (Some(a), Some(b)) => a < b,
    }
}

pub fn hanoi_after(s: &[u8], from: u8, to: u8) -> Positions {
    let mut next = s.to_vec();
    next[top_disk(s, from).expect("legal move")] = to;
    next
}

/// The six (from, to) pairs in action order.
pub const MOVES: [(u8, u8); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

pub fn all_positions(n: usize) -> Vec<Positions> {
    (0..3usize.pow(n as u32))
        .map(|mut k| {
            (0..n)
                .map(|_| {
                    let r = (k % 3) as u8;
                    k /= 3;
                    r
                })
                .collect()
        })
        .collect()
}

/// Rods bottom-to-top from positions.
pub fn rods(s: &[u8]) -> [Vec<u8>; 3] {
    std::array::from_fn(|rod| {
        (0..s.len() as u8)
            .rev()
            .filter(|&d| s[d as usize] == rod as u8)
            .collect()
    })
}

/// Shortest move sequence from all-on-A to all-on-C by breadth-first search.
pub fn bfs_hanoi(n: usize) -> Vec<(u8, u8)> {
    let start = vec![0u8; n];
    let goal = vec![2u8; n];
    let mut parent: HashMap<Positions, (Positions, (u8, u8))> = HashMap::new();
    let mut queue = VecDeque::from([start.clone()]);
    let mut seen = vec![start.clone()];
    while let Some(s) = queue.pop_front() {
        if s == goal {
            break;
        }
        for (from, to) in MOVES {
            if hanoi_legal(&s, from, to) {
                let next = hanoi_after(&s, from, to);
                if !seen.contains(&next) {
                    seen.push(next.clone());
                    parent.insert(next.clone(), (s.clone(), (from, to)));
                    queue.push_back(next);
                }
            }
        }
    }
    let mut path = Vec::new();
    let mut cur = goal;
    while cur != start {
        let (prev, m) = parent[&cur].clone();
        path.push(m);
        cur = prev;
    }
    path.reverse();
    path
}

/// Exact goal probability and invalid-move fraction of the uniform policy
/// over all six moves with a step cap, by forward propagation of the chain.
pub fn hanoi_random_exact(n: usize, horizon: usize) -> (f64, f64) {
    let states = all_positions(n);
    let index = |s: &[u8]| s.iter().rev().fold(0usize, |acc, &r| acc * 3 + r as usize);
    let goal = index(&vec![2u8; n]);
    let mut p = vec![0.0; states.len()];
    p[0] = 1.0;
    let (mut goal_prob, mut steps, mut invalid) = (0.0, 0.0, 0.0);
    for _ in 0..horizon {
        let mut next = vec![0.0; states.len()];
        for (i, s) in states.iter().enumerate() {
            if p[i] == 0.0 {
                continue;
            }
            steps += p[i];
            for (from, to) in MOVES {
                let mass = p[i] / 6.0;
                if hanoi_legal(s, from, to) {
                    let j = index(&hanoi_after(s, from, to));
                    if j == goal {
                        goal_prob += mass;
                    } else {
                        next[j] += mass;
                    }
                } else {
                    invalid += mass;
                    next[i] += mass;
                }
            }
        }
        p = next;
    }
    (goal_prob, invalid / steps)
}

/// Serves an OpenAI-style chat endpoint that always answers `reply`. Returns
/// the base URL; the server lives until the process exits.
pub fn mock_chat_server(reply: &'static str) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0u8; len];
            let _ = reader.read_exact(&mut body);
            let payload =
                serde_json::json!({"choices": [{"message": {"role": "assistant", "content": reply}}]}).to_string();
            let _ = write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
        }
    });
    format!("http://{addr}/v1")
}

/// Response script exercising every purpose: action replies (some
/// unparsable), reflections, heuristic lists, mutations and plans.
pub fn full_script(actions: &[&str]) -> String {
    let mut lines = Vec::new();
    for i in 0..400 {
        if i % 7 == 3 {
            lines.push("I am not sure what to do.".to_string());
        } else {
            lines.push(actions[i % actions.len()].to_string());
        }
    }
    for i in 0..400 {
        lines.push(format!("@reflect Step review {i}: keep the objective in mind."));
    }
    lines.push("@heuristics 1. Prefer moves that made progress.\\n2. Avoid repeating mistakes.".into());
    for i in 0..40 {
        if i % 3 == 0 {
            lines.push("@mutate no rules here".into());
        } else {
            lines.push(format!(
                "@mutate 1. Prefer moves that made progress.\\n2. Avoid repeating mistakes.\\n3. Extra rule {i}."
            ));
        }
    }
    for i in 0..400 {
        lines.push(format!("@plan {} = {}", actions[i % actions.len()], i % 3));
    }
    lines.join("\n")
}
