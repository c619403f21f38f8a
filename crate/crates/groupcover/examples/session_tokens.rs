//! Blind session tokens end to end: mint, blind, sign, unblind, verify,
//! redeem, and the two rejection paths.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use groupcover::tokens::{
    generate_issuer_key, mint_and_blind, sign_blinded, verify, RedeemOutcome, SpentRegistry,
};

fn main() -> groupcover::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let key = generate_issuer_key(&mut rng);
    let mut registry = SpentRegistry::new(5);
    println!(
        "issuer key ready, window limit {} tokens per user",
        registry.window_limit()
    );

    let user = 0;
    let batch = mint_and_blind(&mut registry, user, 3, key.public(), &mut rng)?;
    println!("minted and blinded {} tokens for user {user}", batch.len());

    let mut signed_tokens = Vec::new();
    for (mut token, blinded) in batch {
        // The issuer signs without ever seeing the serial.
        println!(
            "  blinded payload: {}...",
            &blinded.to_hex_line(key.public())[..24]
        );
        let signature = sign_blinded(&key, &blinded)?;
        let signed = token.unblind(key.public(), &signature)?;
        assert!(verify(key.public(), &signed));
        signed_tokens.push(signed);
    }

    for signed in &signed_tokens {
        let outcome = registry.redeem(key.public(), signed);
        println!(
            "redeem {}...: {outcome:?}",
            &signed.to_hex_line(key.public())[..16]
        );
    }

    // Double spending and over-issuance both bounce.
    let again = registry.redeem(key.public(), &signed_tokens[0]);
    assert_eq!(again, RedeemOutcome::RejectedDoubleSpend);
    println!("second redemption of the same serial: {again:?}");
    let refused = mint_and_blind(&mut registry, user, 3, key.public(), &mut rng);
    println!("minting beyond the window limit: {}", refused.unwrap_err());
    Ok(())
}
