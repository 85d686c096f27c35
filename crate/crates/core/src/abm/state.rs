use serde::{Deserialize, Serialize};

/// Disease state of an agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentState {
    /// Susceptible.
    S,
    /// Exposed, latent.
    E,
    /// Infectious, presymptomatic.
    I,
    /// Infectious, asymptomatic.
    A,
    /// Symptomatic, severity not yet resolved.
    Y,
    /// Mild.
    M,
    /// Severe, hospitalised.
    H,
    /// Critical, in intensive care.
    C,
    /// Recovered.
    R,
    /// Dead.
    D,
}

impl AgentState {
    pub const ALL: [AgentState; 10] = [
        AgentState::S,
        AgentState::E,
        AgentState::I,
        AgentState::A,
        AgentState::Y,
        AgentState::M,
        AgentState::H,
        AgentState::C,
        AgentState::R,
        AgentState::D,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_infectious(self) -> bool {
        matches!(
            self,
            AgentState::I
                | AgentState::A
                | AgentState::Y
                | AgentState::M
                | AgentState::H
                | AgentState::C
        )
    }

    /// A test taken in this state comes back positive.
    pub fn is_test_positive(self) -> bool {
        self == AgentState::E || self.is_infectious()
    }

    pub fn is_symptomatic(self) -> bool {
        matches!(
            self,
            AgentState::Y | AgentState::M | AgentState::H | AgentState::C
        )
    }

    pub fn is_hospitalised(self) -> bool {
        matches!(self, AgentState::H | AgentState::C)
    }

    /// States reachable in one transition.
    pub fn successors(self) -> &'static [AgentState] {
        use AgentState::*;
        match self {
            S => &[E],
            E => &[I, A],
            I => &[Y],
            Y => &[M, H],
            H => &[C, R],
            C => &[D, R],
            A | M => &[R],
            R | D => &[],
        }
    }
}

impl std::fmt::Display for AgentState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}
