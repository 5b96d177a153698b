# Mapping an arbitrary ensemble onto the fixed four-voice one.
#
# Monophonic melodic tracks are assigned at random to P1/P2/TR (respecting
# pitch ranges), percussion pitches each get a random noise type, and one
# input yields several distinct randomized examples.

import numpy as np

from chipscore import MapperConfig, MultiTrackScore, Note, Track, encode, map_file

source = MultiTrackScore(
    tracks=(
        Track("melody", 73, False, (Note(72, 0, 11025), Note(74, 11025, 22050))),
        Track("bass", 33, False, (Note(28, 0, 22050),)),  # fits TR only
        Track("pad", 48, False, (Note(60, 0, 22050), Note(64, 0, 22050))),  # polyphonic
        Track("kit", 0, True, (Note(36, 0, 2000), Note(42, 5000, 7000))),
    )
)

cfg = MapperConfig(max_outputs_per_input=5)
examples = map_file(source, cfg, np.random.default_rng(42), source_id="demo")
print(f"{len(examples)} mapped examples (polyphonic pad was skipped)")

for example in examples:
    melodic = {v.value: i for v, i in example.provenance.melodic_assignment}
    noise = dict(example.provenance.percussion_assignment)
    print(f"  melodic {melodic}, percussion pitches -> noise types {noise}")
    print(f"    first tokens: {encode(example.score)[:12]} ...")
