use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::estimation::{Pose, SensingEstimate};
use crate::{Complex64, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Estimate(SensingEstimate),
    /// Compressed raw CSI. Carried by the bus but not consumed by fusion.
    CsiSummary(Vec<Complex64>),
}

/// A broadcast from one device: who it is, where it is and what it sensed.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMessage {
    pub device_id: usize,
    pub timestamp: f64,
    pub pose: Pose,
    pub payload: Payload,
}

impl SensingMessage {
    pub fn estimate(device_id: usize, timestamp: f64, pose: Pose, est: SensingEstimate) -> Self {
        Self {
            device_id,
            timestamp,
            pose,
            payload: Payload::Estimate(est),
        }
    }

    pub fn as_estimate(&self) -> Option<&SensingEstimate> {
        match &self.payload {
            Payload::Estimate(e) => Some(e),
            Payload::CsiSummary(_) => None,
        }
    }

    /// `device_id,t_s,x_m,y_m,heading_deg,range_m,aoa_deg,confidence`; missing values are empty.
    pub fn to_line(&self) -> String {
        let est = self.as_estimate().copied().unwrap_or_default();
        let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v}"));
        format!(
            "{},{},{},{},{},{},{},{}",
            self.device_id,
            self.timestamp,
            self.pose.x,
            self.pose.y,
            self.pose.heading_deg,
            opt(est.range()),
            opt(est.aoa_deg),
            est.confidence
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 8 {
            return invalid(format!("expected 8 fields, got {}", fields.len()));
        }
        let num = |i: usize| -> Result<f64> {
            fields[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("field {} ({:?}): {e}", i + 1, fields[i])))
        };
        let opt = |i: usize| -> Result<Option<f64>> {
            if fields[i].trim().is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        let device_id = fields[0]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("device id {:?}: {e}", fields[0])))?;
        let est = SensingEstimate {
            tof: opt(5)?.map(|r| 2.0 * r / SPEED_OF_LIGHT),
            aoa_deg: opt(6)?,
            velocity: None,
            confidence: num(7)?,
        };
        Ok(Self::estimate(
            device_id,
            num(1)?,
            Pose::new(num(2)?, num(3)?, num(4)?),
            est,
        ))
    }
}

/// A message as seen by one subscriber.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub topic: String,
    pub subscriber: usize,
    pub delivered_at: f64,
    pub message: SensingMessage,
}

/// In-process publish/subscribe bus with a fixed delivery latency.
///
/// Publishers never receive their own messages. Deliveries come out of [`MessageBus::poll`]
/// ordered by delivery time, ties in publish order.
#[derive(Debug, Clone, Default)]
pub struct MessageBus {
    latency_s: f64,
    topics: BTreeMap<String, Vec<usize>>,
    pending: Vec<(u64, Delivery)>,
    seq: u64,
}

impl MessageBus {
    pub fn new(latency_s: f64) -> Result<Self> {
        if !(latency_s >= 0.0 && latency_s.is_finite()) {
            return invalid(format!("latency must be non-negative, got {latency_s}"));
        }
        Ok(Self {
            latency_s,
            ..Self::default()
        })
    }

    pub fn latency(&self) -> f64 {
        self.latency_s
    }

    pub fn create_topic(&mut self, topic: &str) {
        self.topics.entry(topic.to_string()).or_default();
    }

    /// Registers `subscriber` on `topic`, creating the topic if needed.
    pub fn subscribe(&mut self, topic: &str, subscriber: usize) {
        let subs = self.topics.entry(topic.to_string()).or_default();
        if !subs.contains(&subscriber) {
            subs.push(subscriber);
        }
    }

    /// Queues the message for every subscriber except its sender. Returns the number of
    /// deliveries queued; an unknown topic queues nothing.
    pub fn publish(&mut self, topic: &str, message: SensingMessage) -> usize {
        let Some(subs) = self.topics.get(topic) else {
            log::warn!("publish to unknown topic {topic:?} dropped");
            return 0;
        };
        let at = message.timestamp + self.latency_s;
        let mut n = 0;
        for &s in subs.iter().filter(|&&s| s != message.device_id) {
            self.seq += 1;
            self.pending.push((
                self.seq,
                Delivery {
                    topic: topic.to_string(),
                    subscriber: s,
                    delivered_at: at,
                    message: message.clone(),
                },
            ));
            n += 1;
        }
        n
    }

    /// Removes and returns everything due for `subscriber` by time `until`.
    pub fn poll(&mut self, subscriber: usize, until: f64) -> Vec<Delivery> {
        let (mut due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending)
            .into_iter()
            .partition(|(_, d)| d.subscriber == subscriber && d.delivered_at <= until);
        self.pending = rest;
        due.sort_by(|a, b| {
            a.1.delivered_at
                .total_cmp(&b.1.delivered_at)
                .then(a.0.cmp(&b.0))
        });
        due.into_iter().map(|(_, d)| d).collect()
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(dev: usize, t: f64) -> SensingMessage {
        let est = SensingEstimate {
            tof: Some(2.0 * 4.0 / SPEED_OF_LIGHT),
            aoa_deg: Some(10.0),
            velocity: None,
            confidence: 0.5,
        };
        SensingMessage::estimate(dev, t, Pose::new(dev as f64, 0.0, 90.0), est)
    }

    #[test]
    fn two_devices_see_each_other_once() {
        let mut bus = MessageBus::new(0.0).unwrap();
        bus.subscribe("est", 0);
        bus.subscribe("est", 1);
        bus.publish("est", msg(0, 0.1));
        bus.publish("est", msg(1, 0.1));
        let a = bus.poll(0, 1.0);
        let b = bus.poll(1, 1.0);
        assert_eq!(a.len(), 1);
        assert_eq!(a[0].message.device_id, 1);
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].message.device_id, 0);
    }

    #[test]
    fn latency_shifts_delivery() {
        let mut bus = MessageBus::new(0.01).unwrap();
        bus.subscribe("est", 1);
        bus.publish("est", msg(0, 0.5));
        assert!(bus.poll(1, 0.505).is_empty());
        let d = bus.poll(1, 0.51);
        assert_eq!(d.len(), 1);
        assert!((d[0].delivered_at - 0.51).abs() < 1e-12);
    }

    #[test]
    fn three_devices_hundred_rounds() {
        let mut bus = MessageBus::new(0.002).unwrap();
        for d in 0..3 {
            bus.subscribe("est", d);
        }
        let mut queued = 0;
        for r in 0..100 {
            for d in 0..3 {
                queued += bus.publish("est", msg(d, r as f64 * 0.1));
            }
        }
        assert_eq!(queued, 600);
        for d in 0..3 {
            let got = bus.poll(d, f64::INFINITY);
            assert_eq!(got.len(), 200);
            assert!(got.iter().all(|x| x.message.device_id != d));
            assert!(got
                .windows(2)
                .all(|w| w[0].delivered_at <= w[1].delivered_at));
        }
    }

    #[test]
    fn unknown_topic_is_a_no_op() {
        let mut bus = MessageBus::new(0.0).unwrap();
        bus.subscribe("est", 1);
        assert_eq!(bus.publish("other", msg(0, 0.0)), 0);
        assert_eq!(bus.pending(), 0);
    }

    #[test]
    fn line_round_trip() {
        let m = msg(2, 1.25);
        let back = SensingMessage::parse_line(&m.to_line()).unwrap();
        assert_eq!(back.device_id, 2);
        assert!((back.as_estimate().unwrap().range().unwrap() - 4.0).abs() < 1e-9);
        assert_eq!(back.as_estimate().unwrap().aoa_deg, Some(10.0));
        assert!(SensingMessage::parse_line("1,2,3").is_err());
    }
}
