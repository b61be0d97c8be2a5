//! Alternatives, weak orders and profiles.
//!
//! A weak order over `m` alternatives is stored as a reflexive boolean matrix
//! `R(x, y)` meaning "x is weakly preferred to y". Profiles are tuples of
//! order ids, one per voter, encoded row-major (voter 0 is the most
//! significant digit) into a [`ProfileId`].

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Largest alternative count accepted without the guard override.
pub const GUARD_MAX_ALTERNATIVES: usize = 4;
/// Largest voter count accepted without the guard override.
pub const GUARD_MAX_VOTERS: usize = 3;

/// Hard ceilings that hold even with the guard lifted.
const HARD_MAX_ALTERNATIVES: usize = 8;
const HARD_MAX_PROFILES: u64 = 1 << 26;

/// Number of voters and alternatives of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Config {
    voters: usize,
    alternatives: usize,
}

impl Config {
    /// Validated configuration under the default guard (n <= 3, m <= 4).
    pub fn new(voters: usize, alternatives: usize) -> Result<Self> {
        Self::with_guard(voters, alternatives, false)
    }

    pub fn with_guard(voters: usize, alternatives: usize, override_guard: bool) -> Result<Self> {
        if voters < 2 {
            return Err(Error::Parameter(format!("need at least 2 voters, got {voters}")));
        }
        if alternatives < 3 {
            return Err(Error::Parameter(format!(
                "need at least 3 alternatives, got {alternatives}"
            )));
        }
        if !override_guard && (voters > GUARD_MAX_VOTERS || alternatives > GUARD_MAX_ALTERNATIVES) {
            return Err(Error::Parameter(format!(
                "n={voters}, m={alternatives} exceeds the default guard \
                 (n <= {GUARD_MAX_VOTERS}, m <= {GUARD_MAX_ALTERNATIVES}); set the override to proceed"
            )));
        }
        count_profiles_with_guard(voters, alternatives, override_guard)?;
        Ok(Config { voters, alternatives })
    }

    pub fn voters(&self) -> usize {
        self.voters
    }

    pub fn alternatives(&self) -> usize {
        self.alternatives
    }
}

/// Index of an order in the canonical enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct OrderId(pub u32);

/// Row-major index of a profile over its voters' order ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProfileId(pub u32);

impl fmt::Display for ProfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An individual voter or society.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AgentId {
    Voter(usize),
    Society,
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentId::Voter(k) => write!(f, "{}", voter_name(*k)),
            AgentId::Society => write!(f, "s"),
        }
    }
}

/// Voters are named p, q, r, ... as in the classical presentation.
pub fn voter_name(k: usize) -> String {
    const NAMES: &[u8] = b"pqrtuvwxyz";
    match NAMES.get(k) {
        Some(c) => (*c as char).to_string(),
        None => format!("v{k}"),
    }
}

pub fn alt_letter(x: usize) -> char {
    (b'a' + x as u8) as char
}

pub fn alt_from_letter(c: char) -> Option<usize> {
    if c.is_ascii_lowercase() {
        Some((c as u8 - b'a') as usize)
    } else {
        None
    }
}

/// Complete, transitive, reflexive relation over `size` alternatives.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeakOrder {
    size: usize,
    rel: Vec<bool>,
}

impl WeakOrder {
    /// Wraps a row-major matrix, rejecting anything that is not a weak order.
    pub fn from_matrix(size: usize, rel: Vec<bool>) -> Result<Self> {
        if rel.len() != size * size {
            return Err(Error::Parameter(format!(
                "matrix has {} entries, expected {}",
                rel.len(),
                size * size
            )));
        }
        if !is_weak_order(size, &rel) {
            return Err(Error::Parameter("relation is not a weak order".into()));
        }
        Ok(WeakOrder { size, rel })
    }

    /// Builds the order induced by ranks (0 = best). Equal ranks are ties.
    pub fn from_ranks(ranks: &[usize]) -> Self {
        let size = ranks.len();
        let mut rel = vec![false; size * size];
        for x in 0..size {
            for y in 0..size {
                rel[x * size + y] = ranks[x] <= ranks[y];
            }
        }
        WeakOrder { size, rel }
    }

    /// Parses notation such as `a>b>c` or `c>a~b`.
    pub fn parse(notation: &str) -> Result<Self> {
        let mut ranks: Vec<Option<usize>> = Vec::new();
        for (level, group) in notation.split('>').enumerate() {
            for tok in group.split('~') {
                let mut chars = tok.trim().chars();
                let (Some(c), None) = (chars.next(), chars.next()) else {
                    return Err(Error::Parameter(format!("bad alternative `{tok}` in `{notation}`")));
                };
                let x = alt_from_letter(c)
                    .ok_or_else(|| Error::Parameter(format!("bad alternative `{c}`")))?;
                if ranks.len() <= x {
                    ranks.resize(x + 1, None);
                }
                if ranks[x].replace(level).is_some() {
                    return Err(Error::Parameter(format!("alternative `{c}` listed twice")));
                }
            }
        }
        let ranks: Option<Vec<usize>> = ranks.into_iter().collect();
        let ranks =
            ranks.ok_or_else(|| Error::Parameter(format!("`{notation}` skips an alternative")))?;
        Ok(WeakOrder::from_ranks(&ranks))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Weak preference `R(x, y)`.
    pub fn prefers(&self, x: usize, y: usize) -> bool {
        self.rel[x * self.size + y]
    }

    pub fn matrix(&self) -> &[bool] {
        &self.rel
    }

    pub fn has_ties(&self) -> bool {
        (0..self.size).any(|x| (x + 1..self.size).any(|y| self.prefers(x, y) && self.prefers(y, x)))
    }

    /// Off-diagonal cells, row-major, packed most significant first.
    pub fn off_diagonal_bits(&self) -> u64 {
        let mut bits = 0u64;
        for x in 0..self.size {
            for y in 0..self.size {
                if x != y {
                    bits = (bits << 1) | self.prefers(x, y) as u64;
                }
            }
        }
        bits
    }

    /// Rank of each alternative: number of alternatives strictly above it.
    fn ranks(&self) -> Vec<usize> {
        (0..self.size)
            .map(|x| (0..self.size).filter(|&y| strict_prefers(self, y, x)).count())
            .collect()
    }

    /// Notation like `c>a~b`.
    pub fn notation(&self) -> String {
        let ranks = self.ranks();
        let mut levels: Vec<usize> = ranks.clone();
        levels.sort_unstable();
        levels.dedup();
        levels
            .iter()
            .map(|&lv| {
                (0..self.size)
                    .filter(|&x| ranks[x] == lv)
                    .map(alt_letter)
                    .map(String::from)
                    .collect::<Vec<_>>()
                    .join("~")
            })
            .collect::<Vec<_>>()
            .join(">")
    }

    /// Matrix rows as `0`/`1` strings.
    pub fn rows(&self) -> Vec<String> {
        (0..self.size)
            .map(|x| (0..self.size).map(|y| if self.prefers(x, y) { '1' } else { '0' }).collect())
            .collect()
    }
}

/// Reflexive, complete and transitive.
pub fn is_weak_order(size: usize, rel: &[bool]) -> bool {
    if rel.len() != size * size {
        return false;
    }
    let r = |x: usize, y: usize| rel[x * size + y];
    for x in 0..size {
        if !r(x, x) {
            return false;
        }
        for y in 0..size {
            if !(r(x, y) || r(y, x)) {
                return false;
            }
            for z in 0..size {
                if r(x, y) && r(y, z) && !r(x, z) {
                    return false;
                }
            }
        }
    }
    true
}

/// `R(x, y) ∧ ¬R(y, x)`.
pub fn strict_prefers(order: &WeakOrder, x: usize, y: usize) -> bool {
    order.prefers(x, y) && !order.prefers(y, x)
}

/// All weak orders on `m` alternatives in canonical order, guarded to `1 <= m <= 4`.
pub fn enumerate_weak_orders(m: usize) -> Result<Vec<WeakOrder>> {
    if !(1..=GUARD_MAX_ALTERNATIVES).contains(&m) {
        return Err(Error::Parameter(format!(
            "alternative count {m} outside 1..={GUARD_MAX_ALTERNATIVES}"
        )));
    }
    Ok(weak_orders(m))
}

/// Canonical enumeration without the guard.
///
/// Orders are generated as surjective rank functions (ordered set
/// partitions) and sorted: strict orders before orders with ties, then by
/// off-diagonal bit rows in descending lexicographic order. For m = 3 this
/// puts `a>b>c` at id 0 and `a>c>b` at id 1.
pub(crate) fn weak_orders(m: usize) -> Vec<WeakOrder> {
    fn rec(pos: usize, ranks: &mut Vec<usize>, out: &mut Vec<WeakOrder>) {
        let m = ranks.len();
        if pos == m {
            let used = ranks.iter().copied().max().map_or(0, |r| r + 1);
            if (0..used).all(|lv| ranks.contains(&lv)) {
                out.push(WeakOrder::from_ranks(ranks));
            }
            return;
        }
        for lv in 0..m {
            ranks[pos] = lv;
            rec(pos + 1, ranks, out);
        }
    }
    let mut out = Vec::new();
    rec(0, &mut vec![0; m], &mut out);
    out.sort_by_key(|o| (o.has_ties(), std::cmp::Reverse(o.off_diagonal_bits())));
    out
}

/// Ordered Fubini number: count of weak orders on `m` items.
pub fn fubini(m: usize) -> u64 {
    // a(n) = sum_{k=1..n} C(n,k) a(n-k)
    let mut a = vec![1u64; m + 1];
    for n in 1..=m {
        let mut binom = 1u64;
        let mut total = 0u64;
        for k in 1..=n {
            binom = binom * (n - k + 1) as u64 / k as u64;
            total += binom * a[n - k];
        }
        a[n] = total;
    }
    a[m]
}

/// `fubini(m)^n` under the default guard.
pub fn count_profiles(voters: usize, alternatives: usize) -> Result<u64> {
    count_profiles_with_guard(voters, alternatives, false)
}

fn count_profiles_with_guard(voters: usize, alternatives: usize, override_guard: bool) -> Result<u64> {
    let max_m = if override_guard { HARD_MAX_ALTERNATIVES } else { GUARD_MAX_ALTERNATIVES };
    if alternatives > max_m {
        return Err(Error::Parameter(format!("alternative count {alternatives} above {max_m}")));
    }
    let per_voter = fubini(alternatives);
    let total = u32::try_from(voters)
        .ok()
        .and_then(|n| per_voter.checked_pow(n))
        .filter(|&t| t <= HARD_MAX_PROFILES)
        .ok_or_else(|| {
            Error::Parameter(format!(
                "{per_voter}^{voters} profiles exceeds the supported limit of {HARD_MAX_PROFILES}"
            ))
        })?;
    Ok(total)
}

/// Number of profiles for a configuration.
pub fn profile_count(cfg: &Config) -> u64 {
    fubini(cfg.alternatives).pow(cfg.voters as u32)
}

/// One order per voter.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Profile {
    pub orders: Vec<OrderId>,
}

/// The canonical universe for a configuration: its orders and the profile codec.
#[derive(Clone, Debug)]
pub struct Domain {
    cfg: Config,
    orders: Vec<WeakOrder>,
    /// `strict[o][x*m+y]` for quick lookups
    strict: Vec<Vec<bool>>,
    /// place value of each voter's digit
    place: Vec<u32>,
    profiles: u32,
}

impl Domain {
    pub fn new(cfg: Config) -> Self {
        let m = cfg.alternatives;
        let orders = weak_orders(m);
        let strict = orders
            .iter()
            .map(|o| {
                (0..m * m).map(|i| strict_prefers(o, i / m, i % m)).collect::<Vec<bool>>()
            })
            .collect();
        let base = orders.len() as u32;
        let n = cfg.voters;
        let place = (0..n).map(|k| base.pow((n - 1 - k) as u32)).collect();
        let profiles = profile_count(&cfg) as u32;
        Domain { cfg, orders, strict, place, profiles }
    }

    pub fn config(&self) -> &Config {
        &self.cfg
    }

    pub fn voters(&self) -> usize {
        self.cfg.voters
    }

    pub fn alternatives(&self) -> usize {
        self.cfg.alternatives
    }

    pub fn orders(&self) -> &[WeakOrder] {
        &self.orders
    }

    pub fn order(&self, id: OrderId) -> &WeakOrder {
        &self.orders[id.0 as usize]
    }

    pub fn num_profiles(&self) -> u32 {
        self.profiles
    }

    pub fn profile_ids(&self) -> impl Iterator<Item = ProfileId> {
        (0..self.profiles).map(ProfileId)
    }

    pub fn voter_order_id(&self, pid: ProfileId, voter: usize) -> OrderId {
        OrderId((pid.0 / self.place[voter]) % self.orders.len() as u32)
    }

    pub fn voter_order(&self, pid: ProfileId, voter: usize) -> &WeakOrder {
        self.order(self.voter_order_id(pid, voter))
    }

    pub fn voter_strict(&self, pid: ProfileId, voter: usize, x: usize, y: usize) -> bool {
        let o = self.voter_order_id(pid, voter).0 as usize;
        self.strict[o][x * self.cfg.alternatives + y]
    }

    pub fn profile(&self, pid: ProfileId) -> Profile {
        Profile { orders: (0..self.cfg.voters).map(|k| self.voter_order_id(pid, k)).collect() }
    }

    pub fn profile_id(&self, profile: &Profile) -> Result<ProfileId> {
        if profile.orders.len() != self.cfg.voters {
            return Err(Error::Parameter(format!(
                "profile has {} orders, expected {}",
                profile.orders.len(),
                self.cfg.voters
            )));
        }
        let mut id = 0u32;
        for (k, o) in profile.orders.iter().enumerate() {
            if o.0 as usize >= self.orders.len() {
                return Err(Error::Parameter(format!("order id {} out of range", o.0)));
            }
            id += o.0 * self.place[k];
        }
        Ok(ProfileId(id))
    }

    /// Profile id from order notations, one per voter.
    pub fn profile_from_notation(&self, notations: &[&str]) -> Result<ProfileId> {
        let mut orders = Vec::with_capacity(notations.len());
        for s in notations {
            orders.push(self.order_id_of(&WeakOrder::parse(s)?)?);
        }
        self.profile_id(&Profile { orders })
    }

    pub fn order_id_of(&self, order: &WeakOrder) -> Result<OrderId> {
        self.orders
            .iter()
            .position(|o| o == order)
            .map(|i| OrderId(i as u32))
            .ok_or_else(|| Error::Parameter(format!("`{}` is not an order over this domain", order.notation())))
    }

    /// Every voter strictly prefers x to y.
    pub fn unanimous_strict(&self, pid: ProfileId, x: usize, y: usize) -> bool {
        (0..self.cfg.voters).all(|k| self.voter_strict(pid, k, x, y))
    }

    /// Every voter holds the same `R(x,y)` and `R(y,x)` values in both profiles.
    pub fn agree_on_pair(&self, a: ProfileId, b: ProfileId, x: usize, y: usize) -> bool {
        (0..self.cfg.voters).all(|k| {
            let (oa, ob) = (self.voter_order(a, k), self.voter_order(b, k));
            oa.prefers(x, y) == ob.prefers(x, y) && oa.prefers(y, x) == ob.prefers(y, x)
        })
    }

    /// SHA-256 over the enumerated order matrices, hex encoded.
    pub fn fingerprint(&self) -> String {
        order_fingerprint(&self.orders)
    }

    /// Canonical ordered pairs `(x, y)`, `x != y`, lexicographic.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let m = self.cfg.alternatives;
        (0..m).flat_map(move |x| (0..m).filter(move |&y| y != x).map(move |y| (x, y)))
    }

    pub fn pairs_per_profile(&self) -> usize {
        let m = self.cfg.alternatives;
        m * (m - 1)
    }

    pub fn num_cells(&self) -> usize {
        self.profiles as usize * self.pairs_per_profile()
    }

    pub fn pair_index(&self, x: usize, y: usize) -> usize {
        debug_assert_ne!(x, y);
        x * (self.cfg.alternatives - 1) + if y < x { y } else { y - 1 }
    }

    pub fn pair_at(&self, idx: usize) -> (usize, usize) {
        let m1 = self.cfg.alternatives - 1;
        let x = idx / m1;
        let r = idx % m1;
        (x, if r < x { r } else { r + 1 })
    }
}

pub fn order_fingerprint(orders: &[WeakOrder]) -> String {
    let mut h = Sha256::new();
    for o in orders {
        for row in o.rows() {
            h.update(row.as_bytes());
            h.update(b"\n");
        }
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// Standalone form of [`Domain::agree_on_pair`] over explicit profiles.
pub fn profiles_agree_on_pair(
    orders: &[WeakOrder],
    a: &Profile,
    b: &Profile,
    x: usize,
    y: usize,
) -> bool {
    a.orders.len() == b.orders.len()
        && a.orders.iter().zip(&b.orders).all(|(oa, ob)| {
            let (oa, ob) = (&orders[oa.0 as usize], &orders[ob.0 as usize]);
            oa.prefers(x, y) == ob.prefers(x, y) && oa.prefers(y, x) == ob.prefers(y, x)
        })
}

/// Standalone form of [`Domain::unanimous_strict`].
pub fn unanimous_strict(orders: &[WeakOrder], p: &Profile, x: usize, y: usize) -> bool {
    p.orders.iter().all(|o| strict_prefers(&orders[o.0 as usize], x, y))
}

/// Order numbers that the classical three-alternative listing attests,
/// mapped to canonical ids. Unattested numbers are deliberately absent.
pub const ATTESTED_ORDER_NUMBERS: &[(u32, &str)] = &[
    (1, "a>b>c"),
    (2, "a>c>b"),
    (4, "b>c>a"),
    (5, "c>a>b"),
    (6, "c>b>a"),
    (8, "c>a~b"),
];

/// `(attested number, canonical id)` pairs for m = 3.
pub fn attested_order_remap() -> Vec<(u32, OrderId)> {
    let orders = weak_orders(3);
    ATTESTED_ORDER_NUMBERS
        .iter()
        .map(|&(num, notation)| {
            let o = WeakOrder::parse(notation).expect("static notation");
            let id = orders.iter().position(|x| *x == o).expect("attested order exists");
            (num, OrderId(id as u32))
        })
        .collect()
}

#[derive(Serialize)]
struct OrderJson {
    id: u32,
    notation: String,
    rows: Vec<String>,
}

/// One line per order: `id<TAB>notation<TAB>rows`.
pub fn orders_to_text(orders: &[WeakOrder]) -> String {
    let mut out = String::new();
    for (i, o) in orders.iter().enumerate() {
        out.push_str(&format!("{i}\t{}\t{}\n", o.notation(), o.rows().join(" ")));
    }
    out
}

pub fn orders_to_json(orders: &[WeakOrder]) -> serde_json::Value {
    let list: Vec<OrderJson> = orders
        .iter()
        .enumerate()
        .map(|(i, o)| OrderJson { id: i as u32, notation: o.notation(), rows: o.rows() })
        .collect();
    serde_json::to_value(list).expect("plain data")
}

#[derive(Serialize)]
struct ProfileJson {
    id: u32,
    orders: Vec<u32>,
    notation: Vec<String>,
}

/// One line per profile: `pid<TAB>ids<TAB>notations`.
pub fn write_profiles_text<W: std::io::Write>(domain: &Domain, mut w: W) -> std::io::Result<()> {
    for pid in domain.profile_ids() {
        let p = domain.profile(pid);
        let ids: Vec<String> = p.orders.iter().map(|o| o.0.to_string()).collect();
        let names: Vec<String> = p.orders.iter().map(|&o| domain.order(o).notation()).collect();
        writeln!(w, "{}\t{}\t{}", pid.0, ids.join(","), names.join(" "))?;
    }
    Ok(())
}

pub fn profiles_to_json(domain: &Domain) -> serde_json::Value {
    let list: Vec<ProfileJson> = domain
        .profile_ids()
        .map(|pid| {
            let p = domain.profile(pid);
            ProfileJson {
                id: pid.0,
                notation: p.orders.iter().map(|&o| domain.order(o).notation()).collect(),
                orders: p.orders.iter().map(|o| o.0).collect(),
            }
        })
        .collect();
    serde_json::to_value(list).expect("plain data")
}
