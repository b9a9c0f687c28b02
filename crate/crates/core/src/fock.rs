//! Classical Fock-space representation of role/filler structures.
//!
//! Every role is a tensor slot that holds exactly one filler or nothing.
//! Filler index `0` is reserved for the empty filler, so a basis state is
//! just an occupation vector over roles with values in `0..=N`. Binding,
//! unbinding and number operators act on these vectors; the product of an
//! operator that would create a second filler in an occupied role is the
//! zero vector, represented here by the `annihilated` flag.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Name of the reserved empty filler.
pub const EMPTY_FILLER: &str = "0";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FockError {
    #[error("role {role} out of range (state has {roles} roles)")]
    RoleOutOfRange { role: usize, roles: usize },
    #[error("filler {filler} out of range (alphabet has {fillers} non-empty fillers)")]
    FillerOutOfRange { filler: usize, fillers: usize },
    #[error("the empty filler cannot be bound or unbound")]
    EmptyFiller,
    #[error("number operator applied to the zero vector")]
    Annihilated,
    #[error("role {role} bound twice (unique binding violated)")]
    DuplicateRole { role: usize },
    #[error("Fock dimension ({base})^{roles} overflows")]
    DimensionOverflow { base: usize, roles: usize },
    #[error("duplicate name {0:?}")]
    DuplicateName(String),
}

/// A symbol that can be bound to a role. Index 0 is the empty filler.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Filler {
    pub id: usize,
    pub name: String,
}

/// A positional role (tree address or lattice coordinate).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Role {
    pub id: usize,
    pub name: String,
}

/// Dense filler alphabet with the empty filler at index 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillerSet {
    fillers: Vec<Filler>,
}

impl FillerSet {
    /// Builds an alphabet from the non-empty filler names, in order.
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, FockError> {
        let mut fillers = vec![Filler {
            id: 0,
            name: EMPTY_FILLER.to_string(),
        }];
        let mut seen: HashSet<String> = HashSet::from([EMPTY_FILLER.to_string()]);
        for name in names {
            let name = name.as_ref().to_string();
            if !seen.insert(name.clone()) {
                return Err(FockError::DuplicateName(name));
            }
            fillers.push(Filler {
                id: fillers.len(),
                name,
            });
        }
        Ok(Self { fillers })
    }

    /// Number of non-empty fillers (`N`).
    pub fn len(&self) -> usize {
        self.fillers.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: usize) -> Option<&Filler> {
        self.fillers.get(id)
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.fillers.iter().position(|f| f.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Filler> {
        self.fillers.iter()
    }
}

/// Ordered role set; the declaration order is the serialization order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoleSet {
    roles: Vec<Role>,
}

impl RoleSet {
    pub fn new<S: AsRef<str>>(names: &[S]) -> Result<Self, FockError> {
        let mut seen = HashSet::new();
        let mut roles = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref().to_string();
            if !seen.insert(name.clone()) {
                return Err(FockError::DuplicateName(name));
            }
            roles.push(Role {
                id: roles.len(),
                name,
            });
        }
        Ok(Self { roles })
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&Role> {
        self.roles.get(id)
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.roles.iter().position(|r| r.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Role> {
        self.roles.iter()
    }
}

/// One filler-or-empty per role, or the zero vector.
#[derive(Debug, Clone, Eq)]
pub struct FockBasisState {
    occupation: Vec<u16>,
    annihilated: bool,
}

impl PartialEq for FockBasisState {
    fn eq(&self, other: &Self) -> bool {
        match (self.annihilated, other.annihilated) {
            (true, true) => true,
            (false, false) => self.occupation == other.occupation,
            _ => false,
        }
    }
}

impl std::hash::Hash for FockBasisState {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.annihilated.hash(state);
        if !self.annihilated {
            self.occupation.hash(state);
        }
    }
}

impl FockBasisState {
    /// All roles empty.
    pub fn vacuum(roles: usize) -> Self {
        Self {
            occupation: vec![0; roles],
            annihilated: false,
        }
    }

    /// The zero vector over `roles` roles.
    pub fn annihilated(roles: usize) -> Self {
        Self {
            occupation: vec![0; roles],
            annihilated: true,
        }
    }

    /// Wraps an occupation vector, checking fillers against `fillers` (`N`).
    pub fn from_occupation(occupation: Vec<u16>, fillers: usize) -> Result<Self, FockError> {
        if let Some(&bad) = occupation.iter().find(|&&f| f as usize > fillers) {
            return Err(FockError::FillerOutOfRange {
                filler: bad as usize,
                fillers,
            });
        }
        Ok(Self {
            occupation,
            annihilated: false,
        })
    }

    pub fn occupation(&self) -> &[u16] {
        &self.occupation
    }

    pub fn role_count(&self) -> usize {
        self.occupation.len()
    }

    pub fn is_annihilated(&self) -> bool {
        self.annihilated
    }

    /// Filler held by `role`, `0` when empty.
    pub fn filler_at(&self, role: usize) -> Option<u16> {
        self.occupation.get(role).copied()
    }

    /// Mixed-radix index in base `N+1`, first role most significant.
    pub fn basis_index(&self, fillers: usize) -> usize {
        let base = fillers + 1;
        self.occupation
            .iter()
            .fold(0usize, |acc, &f| acc * base + f as usize)
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn from_basis_index(mut index: usize, roles: usize, fillers: usize) -> Self {
        let base = fillers + 1;
        let mut occupation = vec![0u16; roles];
        for slot in occupation.iter_mut().rev() {
            *slot = (index % base) as u16;
            index /= base;
        }
        Self {
            occupation,
            annihilated: false,
        }
    }
}

impl fmt::Display for FockBasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.annihilated {
            return write!(f, "0");
        }
        write!(f, "|")?;
        for (i, v) in self.occupation.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ">")
    }
}

fn check_args(
    state: &FockBasisState,
    role: usize,
    filler: usize,
    fillers: usize,
) -> Result<(), FockError> {
    if role >= state.occupation.len() {
        return Err(FockError::RoleOutOfRange {
            role,
            roles: state.occupation.len(),
        });
    }
    if filler == 0 {
        return Err(FockError::EmptyFiller);
    }
    if filler > fillers {
        return Err(FockError::FillerOutOfRange { filler, fillers });
    }
    Ok(())
}

/// Binding operator `a†_{filler,role}`.
///
/// Binding into an occupied role gives the zero vector regardless of which
/// filler sits there.
pub fn bind(
    state: &FockBasisState,
    role: usize,
    filler: usize,
    fillers: usize,
) -> Result<FockBasisState, FockError> {
    check_args(state, role, filler, fillers)?;
    if state.annihilated || state.occupation[role] != 0 {
        return Ok(FockBasisState::annihilated(state.occupation.len()));
    }
    let mut out = state.clone();
    out.occupation[role] = filler as u16;
    Ok(out)
}

/// Unbinding operator `a_{filler,role}`: empties `role` iff it holds `filler`.
pub fn unbind(
    state: &FockBasisState,
    role: usize,
    filler: usize,
    fillers: usize,
) -> Result<FockBasisState, FockError> {
    check_args(state, role, filler, fillers)?;
    if state.annihilated || state.occupation[role] as usize != filler {
        return Ok(FockBasisState::annihilated(state.occupation.len()));
    }
    let mut out = state.clone();
    out.occupation[role] = 0;
    Ok(out)
}

/// Number operator `n_{filler,role}` eigenvalue on a basis state.
pub fn number(
    state: &FockBasisState,
    role: usize,
    filler: usize,
    fillers: usize,
) -> Result<u8, FockError> {
    check_args(state, role, filler, fillers)?;
    if state.annihilated {
        return Err(FockError::Annihilated);
    }
    Ok(u8::from(state.occupation[role] as usize == filler))
}

/// Positional-role TPR: a list of `(filler, role)` bindings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PtprStructure {
    pub bindings: Vec<(usize, usize)>,
}

impl PtprStructure {
    pub fn new(bindings: Vec<(usize, usize)>) -> Self {
        Self { bindings }
    }
}

/// Injects a pTPR into the Fock space with `roles` roles and `fillers` fillers.
pub fn ptpr_to_fock(
    p: &PtprStructure,
    roles: usize,
    fillers: usize,
) -> Result<FockBasisState, FockError> {
    let mut state = FockBasisState::vacuum(roles);
    for &(filler, role) in &p.bindings {
        check_args(&state, role, filler, fillers)?;
        if state.occupation[role] != 0 {
            return Err(FockError::DuplicateRole { role });
        }
        state = bind(&state, role, filler, fillers)?;
    }
    Ok(state)
}

/// `(N+1)^R`, the dimension of the Fock space.
pub fn fock_dimension(roles: usize, fillers: usize) -> Result<usize, FockError> {
    let base = fillers
        .checked_add(1)
        .ok_or(FockError::DimensionOverflow { base: fillers, roles })?;
    let exp = u32::try_from(roles).map_err(|_| FockError::DimensionOverflow { base, roles })?;
    base.checked_pow(exp)
        .ok_or(FockError::DimensionOverflow { base, roles })
}

/// `M·N`, the dimension of the matching pTPR vector space.
pub fn ptpr_dimension(roles: usize, fillers: usize) -> Result<usize, FockError> {
    roles
        .checked_mul(fillers)
        .ok_or(FockError::DimensionOverflow {
            base: fillers + 1,
            roles,
        })
}
