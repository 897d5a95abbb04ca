"""
Dishonest parties
=================

Two ways the scheme can be cheated.  A designee who refuses to wait for the
helper's bit must guess between two corrections and succeeds half the time.
A Bob who keeps Charlie's atom can rebuild the secret himself, but whatever
he forwards to Charlie is caught by spot checks unless it equals the secret.
"""

from cavityqis import PROBE_SECRET, RandomSource, SecretState, scenario_intercept_resend, scenario_no_cooperation

r = scenario_no_cooperation(PROBE_SECRET, "charlie")
print("guessing designee, exact:", r.success_probability)
r = scenario_no_cooperation(PROBE_SECRET, "charlie", rng=RandomSource(3), trials=5000)
print("guessing designee, sampled:", r.success_probability)

# for |e> or |g> the two candidates differ only by a phase
r = scenario_no_cooperation(SecretState(0, 1), "bob")
print("basis secret:", r.success_probability, "degenerate:", r.degenerate_secret)

st = scenario_intercept_resend(PROBE_SECRET, SecretState(1, 0), 0.25, 8000, RandomSource(4))
print(f"Bob's own fidelity {st.bob_fidelity:.3f}")
print(f"checked {st.checked}, detected {st.detected} ({st.detection_rate:.3f}, exact {st.exact_detection_per_check:.3f})")
