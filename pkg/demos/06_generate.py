# Sampling new scores: from scratch, from a prime, and over a fixed rhythm.
#
# Temperature 0.95 with top-k 32 keeps generation focused; every run is
# reproducible from its seed. Rhythm conditioning masks the model to melodic
# events between the template's time-shift/noise events, so the template
# survives verbatim in the output.

from pathlib import Path

import numpy as np

from chipscore import (
    SamplingParams,
    decode,
    encode,
    generate,
    generate_rhythm_conditioned,
    train,
    validate,
    write_midi,
)

from _common import random_score

rng = np.random.default_rng(1)
corpus = [encode(random_score(rng, notes_per_voice=25)) for _ in range(40)]
model = train(corpus, order=5)
params = SamplingParams(temperature=0.95, top_k=32, max_events=300, rng_seed=9)

fresh = generate(model, [], params)
print(f"from scratch: {len(fresh)} events, report {validate(fresh)}")

prime = corpus[0][:20]
continued = generate(model, prime, params)
print(f"primed: kept {len(prime)}-event prefix, total {len(continued)} events")

# A rhythm skeleton: quarter-ish gaps with noise hits.
template = [615, 100, 614, 370, 620, 100, 614, 370] * 2
conditioned = generate_rhythm_conditioned(model, template, params)
skeleton = [e for e in conditioned if 1 <= e <= 370 or 614 <= e <= 630]
print("template reproduced exactly:", skeleton == template)

out = Path("generated.mid")
out.write_bytes(write_midi(decode(fresh)))
print(f"wrote {out} ({out.stat().st_size} bytes)")
