"""
Sharing a qubit through a GHZ state
===================================

Alice holds an unknown qubit alpha|e> + beta|g> and three atoms in
(|eee> + i|ggg>)/sqrt(2).  She sends her qubit and one GHZ atom through a
driven cavity, measures both, and the secret ends up spread over Bob's and
Charlie's atoms.  Neither can recover it alone.
"""

import numpy as np

from cavityqis import (PROBE_SECRET, RandomSource, derive_correction_table, ghz_distribute,
                       run_ghz_exact, run_ghz_sampled)

secret = PROBE_SECRET
print("secret:", np.round(secret.ket().amps, 4))

# Alice's four outcomes are equally likely, whatever the secret
for b in ghz_distribute(secret):
    print("alice", b.outcome, "p =", round(b.probability, 12))

# Bob measures in the rotated basis and announces his bit.
# The correction Charlie needs depends on both announcements.
table = derive_correction_table("ghz", "charlie")
for rec in table.to_records():
    print(f"  alice={rec['alice']} bob={rec['helper']} -> {rec['correction']}")

# every branch reconstructs perfectly
results = run_ghz_exact(secret, "charlie", table=table)
print("branches:", len(results), "all succeed:", all(r.success for r in results))

# the same with sampled measurement outcomes
s = run_ghz_sampled(secret, "charlie", 2000, RandomSource(1), table=table)
print("sampled success rate:", s.success_rate)

# Bob as designee uses the mirror-image table
print([r["correction"] for r in derive_correction_table("ghz", "bob").to_records()])
