"""Regenerate the bundled example files in src/refgame/fixtures."""

from pathlib import Path

import numpy as np

from refgame.channels import HullSet, MixedCircuit
from refgame.harness import gamefile
from refgame.harness.constructions import (
    PAULI_X,
    build_close_images_verifier,
    flip_qubit_verifier,
    leaky_claim_game,
)
from refgame.transcript import ProverStrategy

OUT = Path(__file__).resolve().parents[1] / "src" / "refgame" / "fixtures"


def main():
    OUT.mkdir(exist_ok=True)
    zero, one = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    identity = MixedCircuit.identity(2)
    const0, const1 = MixedCircuit.constant(zero, 2), MixedCircuit.constant(one, 2)
    plus = np.full((2, 2), 0.5)
    docs = {
        "flip_qubit": gamefile.game_to_doc(flip_qubit_verifier()),
        "flip_qubit_prover": gamefile.prover_to_doc(ProverStrategy([PAULI_X], 1), "prover"),
        "identity_channel": gamefile.channel_to_doc(identity),
        "constant_zero_channel": gamefile.channel_to_doc(const0),
        "constant_one_channel": gamefile.channel_to_doc(const1),
        "close_images_yes": gamefile.game_to_doc(build_close_images_verifier(identity, identity)),
        "close_images_no": gamefile.game_to_doc(build_close_images_verifier(const0, const1)),
        "leaky_claim_yes": gamefile.game_to_doc(leaky_claim_game(0.0, 0.3)),
        "leaky_claim_no": gamefile.game_to_doc(leaky_claim_game(np.pi, np.pi)),
        "separated_sets": gamefile.sets_to_doc([HullSet([zero, plus]), HullSet([one])]),
    }
    for name, doc in docs.items():
        gamefile.write_doc(doc, OUT / f"{name}.json")
        print("wrote", name)


if __name__ == "__main__":
    main()
