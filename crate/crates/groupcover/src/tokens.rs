//! Blind session tokens.
//!
//! Shared proxy identities unlink interactions from users, which invites
//! Sybil abuse; rate-limited anonymous session tokens restore accountability
//! without re-identifying anyone. A user mints serial-numbered tokens,
//! blinds them, and has the issuer sign the blinded payloads without ever
//! seeing a serial. After unblinding, the signature verifies against the
//! bare serial, and a registry of spent serials rejects double use.
//!
//! The signature is a full-domain-hash blind signature over an RSA modulus:
//! `blind(m) = H(m) * r^e`, `sign(x) = x^d`, `unblind(s) = s * r^{-1}`, all
//! mod `n`. Key generation is deterministic given the caller's RNG, which
//! keeps protocol tests reproducible.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;
use sha2::{Digest, Sha256};

use crate::corpus::UserId;
use crate::error::{Error, Result};

pub const SERIAL_BYTES: usize = 16;
pub type Serial = [u8; SERIAL_BYTES];

/// Tokens a user may be issued per window before the issuer refuses.
pub const DEFAULT_WINDOW_LIMIT: u32 = 100;

const DEFAULT_MODULUS_BITS: u64 = 512;
const MILLER_RABIN_ROUNDS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssuerPublicKey {
    pub n: BigUint,
    pub e: BigUint,
}

impl IssuerPublicKey {
    /// Hex width of one signature under this modulus.
    pub fn hex_width(&self) -> usize {
        (self.n.bits() as usize).div_ceil(4)
    }
}

/// Issuer signing key. The private exponent never leaves this struct.
#[derive(Debug, Clone)]
pub struct IssuerKeyPair {
    public: IssuerPublicKey,
    d: BigUint,
}

impl IssuerKeyPair {
    pub fn public(&self) -> &IssuerPublicKey {
        &self.public
    }
}

fn small_primes() -> &'static [u32] {
    &[
        3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
        97, 101, 103, 107, 109, 113,
    ]
}

fn is_probable_prime(candidate: &BigUint, rng: &mut impl Rng) -> bool {
    let two = BigUint::from(2u32);
    if candidate < &two {
        return false;
    }
    for &p in small_primes() {
        let p = BigUint::from(p);
        if candidate == &p {
            return true;
        }
        if (candidate % &p) == BigUint::ZERO {
            return false;
        }
    }
    // Miller-Rabin with random bases.
    let one = BigUint::one();
    let n_minus_1 = candidate - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let base = random_below(rng, &(candidate - &two)) + &two;
        let mut x = base.modpow(&d, candidate);
        if x == one || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, candidate);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn random_below(rng: &mut impl Rng, bound: &BigUint) -> BigUint {
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        let candidate = BigUint::from_bytes_be(&buf) >> (bytes as u64 * 8 - bits);
        if &candidate < bound {
            return candidate;
        }
    }
}

fn random_prime(bits: u64, rng: &mut impl Rng) -> BigUint {
    loop {
        let mut candidate = random_below(rng, &(BigUint::one() << bits));
        candidate |= BigUint::one() << (bits - 1);
        candidate |= BigUint::one();
        if is_probable_prime(&candidate, rng) {
            return candidate;
        }
    }
}

/// Generate an issuer key pair. Deterministic given the RNG state.
pub fn generate_issuer_key(rng: &mut impl Rng) -> IssuerKeyPair {
    generate_issuer_key_with_bits(DEFAULT_MODULUS_BITS, rng)
}

pub fn generate_issuer_key_with_bits(modulus_bits: u64, rng: &mut impl Rng) -> IssuerKeyPair {
    assert!(
        modulus_bits >= 320,
        "modulus must exceed the 256-bit serial hash"
    );
    let e = BigUint::from(65537u32);
    loop {
        let p = random_prime(modulus_bits / 2, rng);
        let q = random_prime(modulus_bits - modulus_bits / 2, rng);
        if p == q {
            continue;
        }
        let n = &p * &q;
        let phi = (&p - BigUint::one()) * (&q - BigUint::one());
        if let Some(d) = e.modinv(&phi) {
            return IssuerKeyPair {
                public: IssuerPublicKey { n, e },
                d,
            };
        }
    }
}

fn hash_serial(serial: &Serial) -> BigUint {
    let digest = Sha256::digest(serial);
    BigUint::from_bytes_be(&digest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenState {
    Minted,
    Blinded,
    Signed,
    Redeemed,
}

/// A user-held session token and its secret blinding factor. State moves
/// forward only: minted, blinded, signed, redeemed.
#[derive(Debug, Clone)]
pub struct SessionToken {
    serial: Serial,
    blinding: BigUint,
    state: TokenState,
}

/// The payload transmitted for signing; reveals nothing about the serial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindedToken {
    pub payload: BigUint,
}

impl BlindedToken {
    pub fn to_hex_line(&self, pk: &IssuerPublicKey) -> String {
        format!("{:0>width$x}", self.payload, width = pk.hex_width())
    }
}

/// The issuer's signature over a blinded payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindSignature {
    pub value: BigUint,
}

/// An unblinded, spendable token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedToken {
    pub serial: Serial,
    pub signature: BigUint,
}

impl SignedToken {
    pub fn to_hex_line(&self, pk: &IssuerPublicKey) -> String {
        let serial_hex: String = self.serial.iter().map(|b| format!("{b:02x}")).collect();
        format!(
            "{serial_hex}{:0>width$x}",
            self.signature,
            width = pk.hex_width()
        )
    }
}

impl SessionToken {
    /// Mint a fresh token with a random serial and blinding factor.
    pub fn mint(pk: &IssuerPublicKey, rng: &mut impl Rng) -> Self {
        let mut serial = [0u8; SERIAL_BYTES];
        rng.fill_bytes(&mut serial);
        let blinding = loop {
            let r = random_below(rng, &pk.n);
            if r > BigUint::one() && num_integer::gcd(r.clone(), pk.n.clone()) == BigUint::one() {
                break r;
            }
        };
        Self {
            serial,
            blinding,
            state: TokenState::Minted,
        }
    }

    pub fn serial(&self) -> &Serial {
        &self.serial
    }

    pub fn state(&self) -> TokenState {
        self.state
    }

    /// Produce the blinded payload `H(serial) * r^e mod n`.
    pub fn blind(&mut self, pk: &IssuerPublicKey) -> Result<BlindedToken> {
        if self.state != TokenState::Minted {
            return Err(Error::TokenState(format!(
                "blind requires a minted token, state is {:?}",
                self.state
            )));
        }
        let payload = (hash_serial(&self.serial) * self.blinding.modpow(&pk.e, &pk.n)) % &pk.n;
        self.state = TokenState::Blinded;
        Ok(BlindedToken { payload })
    }

    /// Strip the blinding factor off the issuer's signature.
    pub fn unblind(
        &mut self,
        pk: &IssuerPublicKey,
        signature: &BlindSignature,
    ) -> Result<SignedToken> {
        if self.state != TokenState::Blinded {
            return Err(Error::TokenState(format!(
                "unblind requires a blinded token, state is {:?}",
                self.state
            )));
        }
        let r_inv = self
            .blinding
            .modinv(&pk.n)
            .ok_or_else(|| Error::MalformedToken("blinding factor not invertible".into()))?;
        self.state = TokenState::Signed;
        Ok(SignedToken {
            serial: self.serial,
            signature: (&signature.value * r_inv) % &pk.n,
        })
    }

    pub fn mark_redeemed(&mut self) {
        self.state = TokenState::Redeemed;
    }
}

/// Sign a blinded payload. The issuer never sees the serial.
pub fn sign_blinded(key: &IssuerKeyPair, blinded: &BlindedToken) -> Result<BlindSignature> {
    if blinded.payload == BigUint::ZERO || blinded.payload >= key.public.n {
        return Err(Error::MalformedToken(
            "payload outside the modulus range".into(),
        ));
    }
    Ok(BlindSignature {
        value: blinded.payload.modpow(&key.d, &key.public.n),
    })
}

/// Check `signature^e == H(serial) mod n`.
pub fn verify(pk: &IssuerPublicKey, token: &SignedToken) -> bool {
    token.signature.modpow(&pk.e, &pk.n) == hash_serial(&token.serial) % &pk.n
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RedeemOutcome {
    Accepted,
    RejectedDoubleSpend,
    RejectedInvalidSignature,
}

impl RedeemOutcome {
    pub fn is_accepted(&self) -> bool {
        matches!(self, RedeemOutcome::Accepted)
    }
}

/// Issuer-side registry: spent serials plus per-user issuance counters for
/// the current window. `redeem` is the single serialization point, an atomic
/// check-and-insert.
#[derive(Debug, Clone)]
pub struct SpentRegistry {
    redeemed: BTreeSet<Serial>,
    issued: BTreeMap<UserId, u32>,
    window_limit: u32,
}

impl Default for SpentRegistry {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW_LIMIT)
    }
}

impl SpentRegistry {
    pub fn new(window_limit: u32) -> Self {
        Self {
            redeemed: BTreeSet::new(),
            issued: BTreeMap::new(),
            window_limit,
        }
    }

    pub fn window_limit(&self) -> u32 {
        self.window_limit
    }

    /// Serials accepted so far; equals the number of accepted redemptions.
    pub fn redeemed_count(&self) -> usize {
        self.redeemed.len()
    }

    pub fn issued_to(&self, user: UserId) -> u32 {
        self.issued.get(&user).copied().unwrap_or(0)
    }

    /// Start a new issuance window, clearing the per-user counters.
    pub fn advance_window(&mut self) {
        self.issued.clear();
    }

    fn record_issuance(&mut self, user: UserId, count: u32) -> Result<()> {
        let issued = self.issued.entry(user).or_insert(0);
        if issued.saturating_add(count) > self.window_limit {
            return Err(Error::IssuanceLimit {
                limit: self.window_limit,
            });
        }
        *issued += count;
        Ok(())
    }

    /// Accept iff the signature verifies and the serial is unseen; record
    /// the serial on acceptance.
    pub fn redeem(&mut self, pk: &IssuerPublicKey, token: &SignedToken) -> RedeemOutcome {
        if !verify(pk, token) {
            return RedeemOutcome::RejectedInvalidSignature;
        }
        if self.redeemed.insert(token.serial) {
            RedeemOutcome::Accepted
        } else {
            RedeemOutcome::RejectedDoubleSpend
        }
    }
}

/// Mint `count` tokens for `user` and blind them, charging the user's
/// issuance allowance. Returns the user-held tokens alongside the payloads
/// to transmit.
pub fn mint_and_blind(
    registry: &mut SpentRegistry,
    user: UserId,
    count: usize,
    pk: &IssuerPublicKey,
    rng: &mut impl Rng,
) -> Result<Vec<(SessionToken, BlindedToken)>> {
    if count == 0 {
        return Err(Error::MalformedToken("cannot mint zero tokens".into()));
    }
    registry.record_issuance(user, count as u32)?;
    let mut batch = Vec::with_capacity(count);
    for _ in 0..count {
        let mut token = SessionToken::mint(pk, rng);
        let blinded = token.blind(pk)?;
        batch.push((token, blinded));
    }
    Ok(batch)
}
