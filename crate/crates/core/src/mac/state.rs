use crate::error::{Error, Result};

/// Operating state of one device.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MacState {
    /// Plain communication, no sensing in progress.
    Communication,
    /// Own transmission in flight with the separator enabled.
    Monostatic { timer_deadline: f64 },
    /// Capturing a peer's transmission for bistatic CSI.
    Bistatic,
}

impl MacState {
    pub fn label(&self) -> &'static str {
        match self {
            MacState::Communication => "C",
            MacState::Monostatic { .. } => "M",
            MacState::Bistatic => "B",
        }
    }

    pub fn separator_active(&self) -> bool {
        matches!(self, MacState::Monostatic { .. })
    }
}

/// Frame types that can start a transmission or reception.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameKind {
    Data,
    Ndp,
    Ack,
}

impl FrameKind {
    pub fn label(self) -> &'static str {
        match self {
            FrameKind::Data => "DATA",
            FrameKind::Ndp => "NDP",
            FrameKind::Ack => "ACK",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacEvent {
    TxStart(FrameKind),
    TxComplete,
    RxStart(FrameKind),
    RxComplete,
    TimerExpiry,
    CalibrationDue,
}

impl MacEvent {
    pub fn label(&self) -> String {
        match self {
            MacEvent::TxStart(k) => format!("TxStart({})", k.label()),
            MacEvent::TxComplete => "TxComplete".to_string(),
            MacEvent::RxStart(k) => format!("RxStart({})", k.label()),
            MacEvent::RxComplete => "RxComplete".to_string(),
            MacEvent::TimerExpiry => "TimerExpiry".to_string(),
            MacEvent::CalibrationDue => "CalibrationDue".to_string(),
        }
    }
}

/// Side effect requested by a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacAction {
    None,
    EnableSeparator,
    DisableSeparator,
    BistaticCapture,
    EndCapture,
    Calibrate,
    DeferCalibration,
}

impl MacAction {
    pub fn label(self) -> &'static str {
        match self {
            MacAction::None => "none",
            MacAction::EnableSeparator => "enable_separator",
            MacAction::DisableSeparator => "disable_separator",
            MacAction::BistaticCapture => "bistatic_capture",
            MacAction::EndCapture => "end_capture",
            MacAction::Calibrate => "calibrate",
            MacAction::DeferCalibration => "defer_calibration",
        }
    }
}

/// Parameters of the transition table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateConfig {
    pub sensing_enabled: bool,
    /// M-state timer, armed when the transmission starts.
    pub m_timer_s: f64,
}

impl Default for StateConfig {
    fn default() -> Self {
        Self {
            sensing_enabled: true,
            m_timer_s: 1e-3,
        }
    }
}

/// Transition table of the C/M/B machine.
///
/// M is entered on any own transmission (DATA, NDP or ACK) and left on whichever comes
/// first of the timer and the end of the transmission; late timer or completion events
/// in C are ignored. B is entered on any peer reception. Undefined pairs return a
/// protocol violation; the caller keeps the old state.
pub fn step(
    state: MacState,
    event: MacEvent,
    now: f64,
    cfg: &StateConfig,
) -> Result<(MacState, MacAction)> {
    use MacAction as A;
    use MacEvent as E;
    use MacState as S;
    let next = match (state, event) {
        (S::Communication, E::TxStart(_)) if cfg.sensing_enabled => (
            S::Monostatic {
                timer_deadline: now + cfg.m_timer_s,
            },
            A::EnableSeparator,
        ),
        (S::Communication, E::TxStart(_)) => (S::Communication, A::None),
        (S::Communication, E::TxComplete | E::TimerExpiry | E::RxComplete) => {
            (S::Communication, A::None)
        }
        (S::Communication, E::RxStart(_)) if cfg.sensing_enabled => {
            (S::Bistatic, A::BistaticCapture)
        }
        (S::Communication, E::RxStart(_)) => (S::Communication, A::None),
        (S::Communication, E::CalibrationDue) => (S::Communication, A::Calibrate),
        (S::Monostatic { .. }, E::TxComplete) => (S::Communication, A::DisableSeparator),
        (S::Monostatic { timer_deadline }, E::TimerExpiry) => {
            if now + 1e-12 < timer_deadline {
                (state, A::None)
            } else {
                (S::Communication, A::DisableSeparator)
            }
        }
        (S::Monostatic { .. } | S::Bistatic, E::CalibrationDue) => (state, A::DeferCalibration),
        (S::Bistatic, E::RxComplete) => (S::Communication, A::EndCapture),
        (s, e) => {
            return Err(Error::ProtocolViolation(format!(
                "event {} undefined in state {}",
                e.label(),
                s.label()
            )))
        }
    };
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> StateConfig {
        StateConfig::default()
    }

    #[test]
    fn data_enters_monostatic() {
        let (s, a) = step(
            MacState::Communication,
            MacEvent::TxStart(FrameKind::Data),
            2.0,
            &cfg(),
        )
        .unwrap();
        assert_eq!(
            s,
            MacState::Monostatic {
                timer_deadline: 2.001
            }
        );
        assert_eq!(a, MacAction::EnableSeparator);
    }

    #[test]
    fn timer_returns_to_communication() {
        let m = MacState::Monostatic {
            timer_deadline: 1.0,
        };
        let (s, a) = step(m, MacEvent::TimerExpiry, 1.0, &cfg()).unwrap();
        assert_eq!(
            (s, a),
            (MacState::Communication, MacAction::DisableSeparator)
        );
    }

    #[test]
    fn peer_reception_enters_bistatic() {
        let (s, a) = step(
            MacState::Communication,
            MacEvent::RxStart(FrameKind::Data),
            0.0,
            &cfg(),
        )
        .unwrap();
        assert_eq!((s, a), (MacState::Bistatic, MacAction::BistaticCapture));
        let (s, a) = step(s, MacEvent::RxComplete, 0.001, &cfg()).unwrap();
        assert_eq!((s, a), (MacState::Communication, MacAction::EndCapture));
    }

    #[test]
    fn ack_also_triggers_monostatic() {
        let (s, _) = step(
            MacState::Communication,
            MacEvent::TxStart(FrameKind::Ack),
            0.0,
            &cfg(),
        )
        .unwrap();
        assert!(s.separator_active());
    }

    #[test]
    fn undefined_pairs_rejected() {
        let m = MacState::Monostatic {
            timer_deadline: 1.0,
        };
        assert!(matches!(
            step(m, MacEvent::RxStart(FrameKind::Data), 0.5, &cfg()),
            Err(Error::ProtocolViolation(_))
        ));
        assert!(step(
            MacState::Bistatic,
            MacEvent::TxStart(FrameKind::Data),
            0.0,
            &cfg()
        )
        .is_err());
    }

    #[test]
    fn sensing_disabled_stays_in_communication() {
        let c = StateConfig {
            sensing_enabled: false,
            ..cfg()
        };
        for e in [
            MacEvent::TxStart(FrameKind::Data),
            MacEvent::RxStart(FrameKind::Data),
        ] {
            assert_eq!(
                step(MacState::Communication, e, 0.0, &c).unwrap().0,
                MacState::Communication
            );
        }
    }
}
