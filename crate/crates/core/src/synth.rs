//! Labeled synthetic flow corpora.
//!
//! Each [`NetworkProfile`] describes a network with its own host count,
//! group (subnet) structure, service mix, flow size distributions and
//! daily activity curve. Attack classes are produced by behavioural
//! generators ([`AttackTemplate`]) that shape both flow-level values and
//! the interaction graph: fan-out, convergence on few hosts, crossing
//! between groups, long-lived sessions and so on.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive_seed;
use crate::flow::{AttackLabel, FlowDataset, FlowRecord};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("unknown attack template {0:?}")]
    UnknownTemplate(String),
    #[error("unknown network profile preset {0:?}")]
    UnknownProfile(String),
    #[error("invalid corpus spec: {field}: {reason}")]
    InvalidSpec { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> SynthError {
    SynthError::InvalidSpec {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Parameters of a log-normal distribution (of the natural log).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalParams {
    pub mu: f64,
    pub sigma: f64,
}

impl LogNormalParams {
    pub const fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }

    pub fn mean(&self) -> f64 {
        (self.mu + self.sigma * self.sigma / 2.0).exp()
    }
}

fn default_ephemeral() -> (u16, u16) {
    (32768, 60999)
}

/// Benign traffic model of one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkProfile {
    pub network_id: String,
    /// Second octet of the internal 10.x.0.0/16 address space.
    pub subnet: u8,
    pub hosts: usize,
    pub groups: usize,
    /// Hosts per group acting as servers for that group.
    pub servers_per_group: usize,
    /// External services used mainly by one group (per group).
    pub external_per_group: usize,
    /// External services shared by every group.
    pub global_services: usize,
    /// Relative rates of same-group, cross-group and external contacts.
    pub intra_rate: f64,
    pub inter_rate: f64,
    pub external_rate: f64,
    pub duration: LogNormalParams,
    pub bytes: LogNormalParams,
    /// Service ports with relative popularity.
    pub ports: Vec<(u16, f64)>,
    /// Inclusive range client source ports are drawn from.
    #[serde(default = "default_ephemeral")]
    pub ephemeral_ports: (u16, u16),
    /// Relative activity for each hour of the day.
    pub diurnal: Vec<f64>,
    pub start_time: f64,
    pub days: u32,
}

impl NetworkProfile {
    pub const PRESETS: [&'static str; 3] = ["campus", "enterprise", "datacenter"];

    pub fn preset(name: &str) -> Result<Self, SynthError> {
        // a daytime peak over a constant floor
        let daily = |peak: f64, floor: f64| -> Vec<f64> {
            (0..24)
                .map(|h| {
                    let x = (h as f64 - peak) / 4.0;
                    floor + (-x * x).exp()
                })
                .collect()
        };
        let p = match name {
            "campus" => NetworkProfile {
                network_id: "campus".into(),
                subnet: 10,
                hosts: 200,
                groups: 5,
                servers_per_group: 3,
                external_per_group: 6,
                global_services: 5,
                intra_rate: 0.7,
                inter_rate: 0.06,
                external_rate: 0.24,
                duration: LogNormalParams::new(0.0, 1.4),
                bytes: LogNormalParams::new(8.0, 1.5),
                ports: vec![(443, 0.35), (80, 0.15), (53, 0.25), (123, 0.1), (993, 0.05), (22, 0.05), (8080, 0.05)],
                ephemeral_ports: (32768, 60999),
                diurnal: daily(15.0, 0.15),
                start_time: 1_609_459_200.0,
                days: 3,
            },
            "enterprise" => NetworkProfile {
                network_id: "enterprise".into(),
                subnet: 20,
                hosts: 160,
                groups: 5,
                servers_per_group: 3,
                external_per_group: 6,
                global_services: 5,
                intra_rate: 0.7,
                inter_rate: 0.06,
                external_rate: 0.24,
                duration: LogNormalParams::new(0.8, 1.2),
                bytes: LogNormalParams::new(8.8, 1.3),
                ports: vec![(443, 0.3), (445, 0.2), (389, 0.1), (53, 0.2), (1433, 0.1), (80, 0.05), (3389, 0.05)],
                ephemeral_ports: (49152, 65535),
                diurnal: daily(11.0, 0.15),
                start_time: 1_420_070_400.0,
                days: 2,
            },
            "datacenter" => NetworkProfile {
                network_id: "datacenter".into(),
                subnet: 30,
                hosts: 150,
                groups: 5,
                servers_per_group: 3,
                external_per_group: 6,
                global_services: 5,
                intra_rate: 0.7,
                inter_rate: 0.06,
                external_rate: 0.24,
                duration: LogNormalParams::new(-0.9, 1.0),
                bytes: LogNormalParams::new(9.6, 1.1),
                ports: vec![(443, 0.45), (53, 0.05), (5432, 0.2), (6379, 0.15), (8443, 0.15)],
                ephemeral_ports: (1024, 65535),
                diurnal: daily(20.0, 1.5),
                start_time: 1_640_995_200.0,
                days: 1,
            },
            other => return Err(SynthError::UnknownProfile(other.to_string())),
        };
        Ok(p)
    }

    pub fn validate(&self, field: &str) -> Result<(), SynthError> {
        if self.hosts < 4 {
            return Err(invalid(format!("{field}.hosts"), "must be at least 4"));
        }
        if self.groups == 0 || self.groups > self.hosts || self.groups > 250 {
            return Err(invalid(format!("{field}.groups"), "must be in 1..=min(hosts, 250)"));
        }
        if self.servers_per_group == 0 || self.servers_per_group * self.groups > self.hosts {
            return Err(invalid(
                format!("{field}.servers_per_group"),
                "must be positive and fit within the host count",
            ));
        }
        if self.external_per_group == 0 || self.external_per_group > 250 {
            return Err(invalid(format!("{field}.external_per_group"), "must be in 1..=250"));
        }
        if self.global_services == 0 || self.global_services > 250 {
            return Err(invalid(format!("{field}.global_services"), "must be in 1..=250"));
        }
        for (name, r) in [
            ("intra_rate", self.intra_rate),
            ("inter_rate", self.inter_rate),
            ("external_rate", self.external_rate),
        ] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(invalid(format!("{field}.{name}"), "must be positive"));
            }
        }
        for (name, d) in [("duration", self.duration), ("bytes", self.bytes)] {
            if !(d.sigma >= 0.0 && d.sigma.is_finite() && d.mu.is_finite()) {
                return Err(invalid(format!("{field}.{name}"), "needs finite mu and sigma >= 0"));
            }
        }
        if self.ports.is_empty() || self.ports.iter().any(|&(_, w)| !(w > 0.0)) {
            return Err(invalid(format!("{field}.ports"), "needs positive weights"));
        }
        if self.diurnal.len() != 24 || self.diurnal.iter().any(|&w| !(w > 0.0)) {
            return Err(invalid(format!("{field}.diurnal"), "needs 24 positive weights"));
        }
        let (lo, hi) = self.ephemeral_ports;
        if lo == 0 || lo > hi {
            return Err(invalid(format!("{field}.ephemeral_ports"), "needs 1 <= low <= high"));
        }
        if self.days == 0 {
            return Err(invalid(format!("{field}.days"), "must be positive"));
        }
        Ok(())
    }

    fn group_size(&self) -> usize {
        self.hosts / self.groups
    }

    /// Address of host `i` (0-based). Hosts are assigned to groups in
    /// contiguous blocks; the first `servers_per_group` of each block are servers.
    pub fn host_ip(&self, i: usize) -> String {
        let g = (i / self.group_size()).min(self.groups - 1);
        let within = i - g * self.group_size();
        format!("10.{}.{}.{}", self.subnet, g, within + 10)
    }

    fn group_of(&self, i: usize) -> usize {
        (i / self.group_size()).min(self.groups - 1)
    }

    fn group_hosts(&self, g: usize) -> std::ops::Range<usize> {
        let start = g * self.group_size();
        let end = if g == self.groups - 1 {
            self.hosts
        } else {
            start + self.group_size()
        };
        start..end
    }

    fn group_servers(&self, g: usize) -> std::ops::Range<usize> {
        let start = g * self.group_size();
        start..start + self.servers_per_group
    }

    /// Address of external service `k` of group `g`.
    pub fn group_service_ip(&self, g: usize, k: usize) -> String {
        format!("203.{}.{}.{}", self.subnet, g, k + 1)
    }

    pub fn global_service_ip(&self, k: usize) -> String {
        format!("203.{}.255.{}", self.subnet, k + 1)
    }

    /// Expected benign bytes per flow.
    pub fn mean_bytes(&self) -> f64 {
        self.bytes.mean()
    }

    fn end_time(&self) -> f64 {
        self.start_time + self.days as f64 * 86400.0
    }
}

struct TimeSampler {
    hours: WeightedIndex<f64>,
    start: f64,
    days: u32,
}

impl TimeSampler {
    fn new(p: &NetworkProfile) -> Self {
        Self {
            hours: WeightedIndex::new(&p.diurnal).expect("diurnal weights validated"),
            start: p.start_time,
            days: p.days,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        let day = rng.random_range(0..self.days) as f64;
        let hour = self.hours.sample(rng) as f64;
        let secs = rng.random_range(0.0..3600.0);
        round_ms(self.start + day * 86400.0 + hour * 3600.0 + secs)
    }
}

fn round_ms(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn round_us(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn protocol_for(port: u16) -> u8 {
    match port {
        53 | 123 | 161 | 514 => 17,
        _ => 6,
    }
}

fn ephemeral_port(profile: &NetworkProfile, rng: &mut ChaCha8Rng) -> u16 {
    rng.random_range(profile.ephemeral_ports.0..=profile.ephemeral_ports.1)
}

fn packets_for(bytes: u64, rng: &mut ChaCha8Rng) -> u64 {
    let per_packet = rng.random_range(300.0..1200.0);
    ((bytes as f64 / per_packet).ceil() as u64).max(1)
}

/// Correlated log-normal draws for duration and bytes.
fn sample_size(
    duration: LogNormalParams,
    bytes: LogNormalParams,
    rho: f64,
    rng: &mut ChaCha8Rng,
) -> (f64, u64) {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    let d = (duration.mu + duration.sigma * z1).exp();
    let b = (bytes.mu + bytes.sigma * (rho * z1 + (1.0 - rho * rho).sqrt() * z2)).exp();
    (round_us(d), b.round().max(1.0) as u64)
}

/// Share of same-group contacts going to peers rather than servers.
const PEER_SHARE: f64 = 0.1;
/// Share of external contacts going to globally shared services.
const GLOBAL_SHARE: f64 = 0.1;

/// Benign flows following the profile's contact model.
pub fn generate_benign(profile: &NetworkProfile, n_flows: usize, seed: u64) -> FlowDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = TimeSampler::new(profile);
    let contact = WeightedIndex::new([profile.intra_rate, profile.inter_rate, profile.external_rate])
        .expect("rates validated");
    let port_pick = WeightedIndex::new(profile.ports.iter().map(|p| p.1)).expect("ports validated");
    // popularity falls off with rank
    let zipf = |n: usize| WeightedIndex::new((0..n).map(|k| 1.0 / (k as f64 + 1.0))).expect("n > 0");
    let group_pick = zipf(profile.external_per_group);
    let global_pick = zipf(profile.global_services);
    let mut records = Vec::with_capacity(n_flows);
    for _ in 0..n_flows {
        let src = rng.random_range(0..profile.hosts);
        let g = profile.group_of(src);
        let dst_ip = match contact.sample(&mut rng) {
            0 => {
                let target = if rng.random_bool(PEER_SHARE) {
                    rng.random_range(profile.group_hosts(g))
                } else {
                    rng.random_range(profile.group_servers(g))
                };
                profile.host_ip(target)
            }
            1 => {
                let other = if profile.groups == 1 {
                    g
                } else {
                    (g + rng.random_range(1..profile.groups)) % profile.groups
                };
                profile.host_ip(rng.random_range(profile.group_servers(other)))
            }
            _ if rng.random_bool(GLOBAL_SHARE) => profile.global_service_ip(global_pick.sample(&mut rng)),
            _ => profile.group_service_ip(g, group_pick.sample(&mut rng)),
        };
        let dst_port = profile.ports[port_pick.sample(&mut rng)].0;
        let (duration, total_bytes) = sample_size(profile.duration, profile.bytes, 0.5, &mut rng);
        records.push(FlowRecord {
            timestamp: times.sample(&mut rng),
            src_ip: profile.host_ip(src),
            dst_ip,
            src_port: ephemeral_port(profile, &mut rng),
            dst_port,
            protocol: protocol_for(dst_port),
            duration,
            total_bytes,
            packet_count: packets_for(total_bytes, &mut rng),
            label: AttackLabel::Benign,
        });
    }
    FlowDataset::new(profile.network_id.clone(), records)
}

/// Behavioural shape of an attack class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// One source sweeping many hosts and ports with tiny flows.
    Scanner,
    /// Repeated targeted probes of a few services.
    Interrogation,
    /// Many internal bots beaconing periodically to one or two controllers.
    Botnet,
    /// Low-rate long-lived sessions to a controller.
    CommandControl,
    /// Few very large outbound transfers.
    Exfiltration,
    /// Infection spreading host to host over time.
    Worm,
    /// Bulk rewriting of file shares across groups.
    Ransomware,
    /// Moderate uploads from several hosts to drop servers.
    Infostealer,
    /// Inbound interactive sessions from a remote controller.
    Rat,
    /// Payload fetches from several external hosts.
    Downloader,
}

/// Parameters of an attack generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackTemplate {
    pub class: String,
    pub behavior: Behavior,
    /// Distinct originating hosts.
    pub sources: usize,
    /// Distinct destination hosts (upper bound for spreading behaviours).
    pub targets: usize,
    pub ports: Vec<u16>,
    pub duration: LogNormalParams,
    pub bytes: LogNormalParams,
    /// Beacon period in seconds, for periodic behaviours.
    pub period: Option<f64>,
}

impl AttackTemplate {
    /// Built-in template for one of the registered attack classes.
    pub fn builtin(class: &str) -> Result<Self, SynthError> {
        use Behavior::*;
        let t = |behavior, sources, targets, ports: &[u16], duration, bytes, period| AttackTemplate {
            class: class.to_string(),
            behavior,
            sources,
            targets,
            ports: ports.to_vec(),
            duration,
            bytes,
            period,
        };
        let ln = LogNormalParams::new;
        Ok(match class {
            "scanning" => t(Scanner, 1, 0, &[], ln(-4.6, 0.5), ln(4.1, 0.3), None),
            "interrogation" => t(
                Interrogation,
                1,
                4,
                &[21, 22, 23, 25, 110, 139, 445, 1433, 3306, 3389, 5900, 8080],
                ln(-0.7, 0.6),
                ln(6.8, 0.4),
                None,
            ),
            "botnet" => t(Botnet, 24, 2, &[443, 8080], ln(0.0, 0.3), ln(6.1, 0.2), Some(60.0)),
            "command_control" => t(CommandControl, 3, 1, &[8443, 443], ln(6.8, 0.5), ln(8.0, 0.6), Some(900.0)),
            "exfiltration" => t(Exfiltration, 2, 2, &[443, 22, 21], ln(4.8, 0.7), ln(4.0, 0.6), None),
            "worm" => t(Worm, 1, 6, &[445, 139], ln(-1.2, 0.5), ln(7.8, 0.4), None),
            "ransomware" => t(Ransomware, 2, 12, &[445], ln(4.1, 0.5), ln(14.5, 0.5), None),
            "infostealer" => t(Infostealer, 12, 2, &[80, 443], ln(1.6, 0.6), ln(9.9, 0.6), None),
            "rat" => t(Rat, 1, 3, &[4444, 5555], ln(5.7, 1.0), ln(10.8, 1.0), None),
            "downloader" => t(Downloader, 6, 12, &[80], ln(2.3, 0.5), ln(13.1, 0.7), None),
            other => return Err(SynthError::UnknownTemplate(other.to_string())),
        })
    }

    /// Numeric summary used to check that templates are mutually distinct.
    pub fn parameter_vector(&self) -> Vec<f64> {
        vec![
            self.behavior as u8 as f64,
            (self.sources as f64).ln_1p(),
            (self.targets as f64).ln_1p(),
            self.ports.iter().map(|&p| p as f64).sum::<f64>().ln_1p(),
            self.duration.mu,
            self.duration.sigma,
            self.bytes.mu,
            self.bytes.sigma,
            self.period.unwrap_or(0.0).ln_1p(),
        ]
    }
}

fn attacker_ip(profile: &NetworkProfile, class_tag: usize, k: usize) -> String {
    format!("198.51.{}.{}", profile.subnet.wrapping_add(class_tag as u8), k + 1)
}

fn pick_hosts(profile: &NetworkProfile, count: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut all: Vec<usize> = (0..profile.hosts).collect();
    all.shuffle(rng);
    all.truncate(count.min(profile.hosts));
    all
}

/// Attack flows for `template` placed inside `profile`'s address space.
pub fn generate_attack(
    template: &AttackTemplate,
    profile: &NetworkProfile,
    n_flows: usize,
    seed: u64,
) -> FlowDataset {
    use Behavior::*;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times = TimeSampler::new(profile);
    let tag = template.behavior as usize;
    let label = AttackLabel::attack(&template.class);
    let window = (profile.start_time, profile.end_time());
    let mut records = Vec::with_capacity(n_flows);
    let push = |records: &mut Vec<FlowRecord>,
                    rng: &mut ChaCha8Rng,
                    ts: f64,
                    src: String,
                    dst: String,
                    dst_port: u16,
                    bytes_override: Option<u64>| {
        let (duration, mut total_bytes) = sample_size(template.duration, template.bytes, 0.3, rng);
        if let Some(b) = bytes_override {
            total_bytes = b;
        }
        records.push(FlowRecord {
            timestamp: ts,
            src_ip: src,
            dst_ip: dst,
            src_port: ephemeral_port(profile, rng),
            dst_port,
            protocol: protocol_for(dst_port),
            duration,
            total_bytes,
            packet_count: packets_for(total_bytes, rng),
            label: label.clone(),
        });
    };
    let port_of = |rng: &mut ChaCha8Rng| *template.ports.choose(rng).unwrap_or(&443);

    match template.behavior {
        Scanner => {
            let src = attacker_ip(profile, tag, 0);
            let mut ports: Vec<u16> = (1..=1024).collect();
            ports.shuffle(&mut rng);
            let start = times.sample(&mut rng);
            for i in 0..n_flows {
                let target = profile.host_ip(rng.random_range(0..profile.hosts));
                let port = ports[i % ports.len()];
                let ts = round_ms(start + i as f64 * rng.random_range(0.01..0.2));
                push(&mut records, &mut rng, ts, src.clone(), target, port, None);
            }
        }
        Interrogation => {
            let targets: Vec<usize> = (0..template.targets)
                .map(|_| {
                    let g = rng.random_range(0..profile.groups);
                    rng.random_range(profile.group_servers(g))
                })
                .collect();
            for _ in 0..n_flows {
                let src = attacker_ip(profile, tag, rng.random_range(0..template.sources));
                let dst = profile.host_ip(*targets.choose(&mut rng).unwrap());
                let port = port_of(&mut rng);
                let ts = times.sample(&mut rng);
                push(&mut records, &mut rng, ts, src, dst, port, None);
            }
        }
        Botnet | CommandControl => {
            let bots = pick_hosts(profile, template.sources, &mut rng);
            let period = template.period.unwrap_or(60.0);
            let mut next: Vec<f64> = bots
                .iter()
                .map(|_| times.sample(&mut rng))
                .collect();
            for i in 0..n_flows {
                let b = i % bots.len();
                let src = profile.host_ip(bots[b]);
                let dst = attacker_ip(profile, tag, rng.random_range(0..template.targets));
                let port = port_of(&mut rng);
                let ts = round_ms(next[b]);
                next[b] += period * rng.random_range(0.9..1.1);
                if next[b] >= window.1 {
                    next[b] = window.0 + (next[b] - window.1);
                }
                push(&mut records, &mut rng, ts, src, dst, port, None);
            }
        }
        Exfiltration => {
            let srcs = pick_hosts(profile, template.sources, &mut rng);
            let mean = profile.mean_bytes();
            for _ in 0..n_flows {
                let src = profile.host_ip(*srcs.choose(&mut rng).unwrap());
                let dst = attacker_ip(profile, tag, rng.random_range(0..template.targets));
                let port = port_of(&mut rng);
                // every transfer is at least 20x the benign mean
                let factor = 20.0 * (template.bytes.mu + template.bytes.sigma * rng.sample::<f64, _>(StandardNormal)).exp().max(1.0);
                let bytes = (mean * factor).round() as u64;
                let ts = times.sample(&mut rng);
                push(&mut records, &mut rng, ts, src, dst, port, Some(bytes));
            }
        }
        Worm => {
            let mut infected = pick_hosts(profile, 1, &mut rng);
            let mut ts = times.sample(&mut rng);
            for _ in 0..n_flows {
                let src = *infected.choose(&mut rng).unwrap();
                let dst = rng.random_range(0..profile.hosts);
                if infected.len() < template.targets && !infected.contains(&dst) && rng.random_bool(0.3) {
                    infected.push(dst);
                }
                ts = round_ms(ts + rng.random_range(0.5..20.0));
                if ts >= window.1 {
                    ts = window.0 + (ts - window.1);
                }
                let port = port_of(&mut rng);
                push(&mut records, &mut rng, ts, profile.host_ip(src), profile.host_ip(dst), port, None);
            }
        }
        Ransomware => {
            let srcs = pick_hosts(profile, template.sources, &mut rng);
            let servers: Vec<usize> = (0..profile.groups)
                .flat_map(|g| profile.group_servers(g))
                .collect();
            let targets: Vec<usize> = servers
                .choose_multiple(&mut rng, template.targets.min(servers.len()))
                .copied()
                .collect();
            let start = times.sample(&mut rng);
            for i in 0..n_flows {
                let src = profile.host_ip(*srcs.choose(&mut rng).unwrap());
                let dst = profile.host_ip(*targets.choose(&mut rng).unwrap());
                let ts = round_ms(start + i as f64 * rng.random_range(1.0..5.0));
                let port = port_of(&mut rng);
                push(&mut records, &mut rng, ts, src, dst, port, None);
            }
        }
        Infostealer | Downloader => {
            let srcs = pick_hosts(profile, template.sources, &mut rng);
            for _ in 0..n_flows {
                let src = profile.host_ip(*srcs.choose(&mut rng).unwrap());
                let dst = attacker_ip(profile, tag, rng.random_range(0..template.targets));
                let port = port_of(&mut rng);
                let ts = times.sample(&mut rng);
                push(&mut records, &mut rng, ts, src, dst, port, None);
            }
        }
        Rat => {
            let victims = pick_hosts(profile, template.targets, &mut rng);
            for _ in 0..n_flows {
                let src = attacker_ip(profile, tag, rng.random_range(0..template.sources.max(1)));
                let dst = profile.host_ip(*victims.choose(&mut rng).unwrap());
                let port = port_of(&mut rng);
                let ts = times.sample(&mut rng);
                push(&mut records, &mut rng, ts, src, dst, port, None);
            }
        }
    }
    FlowDataset::new(profile.network_id.clone(), records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Preset(String),
    Custom(NetworkProfile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackMix {
    pub class: String,
    /// Share of each network's flows drawn from this class.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoldoutSpec {
    pub class: String,
    pub prevalence: f64,
}

/// Everything needed to regenerate a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    pub seed: u64,
    pub flows_per_network: usize,
    pub profiles: Vec<ProfileSpec>,
    #[serde(default)]
    pub attacks: Vec<AttackMix>,
    #[serde(default)]
    pub holdout: Option<HoldoutSpec>,
}

impl CorpusSpec {
    /// Three preset networks, every registered attack class at 1.5% of flows.
    pub fn demo(flows_per_network: usize, seed: u64) -> Self {
        Self {
            seed,
            flows_per_network,
            profiles: NetworkProfile::PRESETS
                .iter()
                .map(|p| ProfileSpec::Preset(p.to_string()))
                .collect(),
            attacks: crate::flow::REGISTERED_CLASSES
                .iter()
                .map(|c| AttackMix {
                    class: c.to_string(),
                    fraction: 0.015,
                })
                .collect(),
            holdout: None,
        }
    }

    pub fn resolve_profiles(&self) -> Result<Vec<NetworkProfile>, SynthError> {
        if self.profiles.is_empty() {
            return Err(invalid("profiles", "at least one profile is required"));
        }
        let mut out = Vec::new();
        for (i, p) in self.profiles.iter().enumerate() {
            let profile = match p {
                ProfileSpec::Preset(name) => NetworkProfile::preset(name)
                    .map_err(|_| invalid(format!("profiles[{i}]"), format!("unknown preset {name:?}")))?,
                ProfileSpec::Custom(p) => p.clone(),
            };
            profile.validate(&format!("profiles[{i}]"))?;
            if out.iter().any(|o: &NetworkProfile| o.network_id == profile.network_id) {
                return Err(invalid(format!("profiles[{i}].network_id"), "duplicate network id"));
            }
            out.push(profile);
        }
        Ok(out)
    }

    /// Flow counts per class for one network, in generation order.
    pub fn class_counts(&self) -> Result<Vec<(AttackLabel, usize)>, SynthError> {
        if self.flows_per_network == 0 {
            return Err(invalid("flows_per_network", "must be positive"));
        }
        let n = self.flows_per_network as f64;
        let mut counts = Vec::new();
        let mut mixes: Vec<(String, f64, String)> = self
            .attacks
            .iter()
            .enumerate()
            .map(|(i, a)| (a.class.clone(), a.fraction, format!("attacks[{i}]")))
            .collect();
        if let Some(h) = &self.holdout {
            mixes.push((h.class.clone(), h.prevalence, "holdout".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (class, fraction, field) in mixes {
            AttackTemplate::builtin(&class)
                .map_err(|_| invalid(format!("{field}.class"), format!("unknown attack class {class:?}")))?;
            if !(0.0..1.0).contains(&fraction) {
                return Err(invalid(format!("{field}.fraction"), "must lie in [0, 1)"));
            }
            if !seen.insert(class.clone()) {
                return Err(invalid(format!("{field}.class"), "class listed twice"));
            }
            counts.push((AttackLabel::attack(&class), (fraction * n).round() as usize));
        }
        let attack_total: usize = counts.iter().map(|c| c.1).sum();
        if attack_total >= self.flows_per_network {
            return Err(invalid("attacks", "attack flows leave no room for benign traffic"));
        }
        counts.insert(0, (AttackLabel::Benign, self.flows_per_network - attack_total));
        Ok(counts)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.resolve_profiles()?;
        self.class_counts()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkManifest {
    pub network_id: String,
    pub seed: u64,
    pub total: usize,
    pub counts: BTreeMap<String, usize>,
    pub profile: NetworkProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub flows_per_network: usize,
    pub holdout: Option<HoldoutSpec>,
    pub networks: Vec<NetworkManifest>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub networks: Vec<FlowDataset>,
    pub manifest: Manifest,
}

/// Generates one dataset per profile. Records are sorted by timestamp.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus, SynthError> {
    let profiles = spec.resolve_profiles()?;
    let counts = spec.class_counts()?;
    let mut networks = Vec::new();
    let mut manifests = Vec::new();
    for (ni, profile) in profiles.iter().enumerate() {
        let mut records = Vec::with_capacity(spec.flows_per_network);
        let mut class_counts = BTreeMap::new();
        for (si, (label, n)) in counts.iter().enumerate() {
            let seed = derive_seed(spec.seed, ni, si);
            let part = match label {
                AttackLabel::Attack(class) => {
                    generate_attack(&AttackTemplate::builtin(class)?, profile, *n, seed)
                }
                _ => generate_benign(profile, *n, seed),
            };
            class_counts.insert(label.to_string(), part.len());
            records.extend(part.records);
        }
        records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        manifests.push(NetworkManifest {
            network_id: profile.network_id.clone(),
            seed: derive_seed(spec.seed, ni, usize::MAX),
            total: records.len(),
            counts: class_counts,
            profile: profile.clone(),
        });
        networks.push(FlowDataset::new(profile.network_id.clone(), records));
    }
    Ok(Corpus {
        networks,
        manifest: Manifest {
            seed: spec.seed,
            flows_per_network: spec.flows_per_network,
            holdout: spec.holdout.clone(),
            networks: manifests,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{parse_flow_record, FlowFormat};
    use std::collections::HashSet;

    fn campus() -> NetworkProfile {
        NetworkProfile::preset("campus").unwrap()
    }

    #[test]
    fn benign_label_and_determinism() {
        let a = generate_benign(&campus(), 1000, 1);
        assert_eq!(a.len(), 1000);
        assert!(a.records.iter().all(|r| r.label == AttackLabel::Benign));
        assert_eq!(a, generate_benign(&campus(), 1000, 1));
        assert_ne!(a, generate_benign(&campus(), 1000, 2));
    }

    #[test]
    fn scanner_contract() {
        let t = AttackTemplate::builtin("scanning").unwrap();
        let ds = generate_attack(&t, &campus(), 200, 3);
        let srcs: HashSet<_> = ds.records.iter().map(|r| &r.src_ip).collect();
        let ports: HashSet<_> = ds.records.iter().map(|r| r.dst_port).collect();
        assert_eq!(srcs.len(), 1);
        assert!(ports.len() >= 50);
        assert!(ds.records.iter().all(|r| r.label == AttackLabel::attack("scanning")));
    }

    #[test]
    fn exfiltration_contract() {
        let p = campus();
        let ds = generate_attack(&AttackTemplate::builtin("exfiltration").unwrap(), &p, 50, 4);
        let mean = ds.records.iter().map(|r| r.total_bytes as f64).sum::<f64>() / 50.0;
        assert!(mean >= 10.0 * p.mean_bytes(), "{mean} vs {}", p.mean_bytes());
    }

    #[test]
    fn botnet_contract() {
        let ds = generate_attack(&AttackTemplate::builtin("botnet").unwrap(), &campus(), 100, 5);
        let srcs: HashSet<_> = ds.records.iter().map(|r| &r.src_ip).collect();
        let dsts: HashSet<_> = ds.records.iter().map(|r| &r.dst_ip).collect();
        assert!(srcs.len() >= 5);
        assert!(dsts.len() <= 2);
    }

    #[test]
    fn unknown_template() {
        assert!(matches!(
            AttackTemplate::builtin("teleport"),
            Err(SynthError::UnknownTemplate(_))
        ));
    }

    #[test]
    fn templates_are_pairwise_distinct() {
        let vecs: Vec<Vec<f64>> = crate::flow::REGISTERED_CLASSES
            .iter()
            .map(|c| AttackTemplate::builtin(c).unwrap().parameter_vector())
            .collect();
        for i in 0..vecs.len() {
            for j in i + 1..vecs.len() {
                let d: f64 = vecs[i]
                    .iter()
                    .zip(&vecs[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                assert!(d >= 1.0, "{i} vs {j}: {d}");
            }
        }
    }

    #[test]
    fn corpus_counts_and_determinism() {
        let mut spec = CorpusSpec::demo(20_000, 42);
        spec.attacks.retain(|a| a.class != "exfiltration");
        spec.holdout = Some(HoldoutSpec {
            class: "exfiltration".into(),
            prevalence: 0.015,
        });
        let counts = spec.class_counts().unwrap();
        assert!(counts.contains(&(AttackLabel::attack("exfiltration"), 300)));

        let small = CorpusSpec::demo(2_000, 7);
        let a = generate_corpus(&small).unwrap();
        let b = generate_corpus(&small).unwrap();
        assert_eq!(a.manifest, b.manifest);
        assert_eq!(a.networks, b.networks);
        assert_eq!(a.networks.len(), 3);
        for (ds, m) in a.networks.iter().zip(&a.manifest.networks) {
            assert_eq!(ds.len(), 2_000);
            assert_eq!(m.counts.values().sum::<usize>(), 2_000);
            assert_eq!(m.counts["scanning"], 30);
            assert!(ds.records.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        }
    }

    #[test]
    fn all_benign_corpus() {
        let spec = CorpusSpec {
            attacks: vec![],
            ..CorpusSpec::demo(500, 1)
        };
        let c = generate_corpus(&spec).unwrap();
        assert!(c.networks.iter().all(|n| n.records.iter().all(|r| r.label.is_benign())));
    }

    #[test]
    fn generated_records_survive_validation() {
        let c = generate_corpus(&CorpusSpec::demo(1_500, 9)).unwrap();
        for ds in &c.networks {
            let mut buf = Vec::new();
            ds.write_csv(&mut buf).unwrap();
            let text = String::from_utf8(buf).unwrap();
            for (line, rec) in text.lines().skip(1).zip(&ds.records) {
                assert_eq!(&parse_flow_record(line, FlowFormat::Csv).unwrap(), rec);
            }
        }
    }

    #[test]
    fn spec_validation_names_fields() {
        let mut spec = CorpusSpec::demo(100, 1);
        spec.attacks[2].fraction = 1.5;
        let err = spec.validate().unwrap_err().to_string();
        assert!(err.contains("attacks[2].fraction"), "{err}");

        let mut spec = CorpusSpec::demo(100, 1);
        spec.profiles[1] = ProfileSpec::Preset("moon".into());
        let err = spec.validate().unwrap_err().to_string();
        assert!(err.contains("profiles[1]"), "{err}");

        let mut spec = CorpusSpec::demo(100, 1);
        spec.attacks[0].class = "teleport".into();
        assert!(spec.validate().unwrap_err().to_string().contains("attacks[0].class"));
    }
}
