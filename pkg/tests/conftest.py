import pytest

from freqforest.pipeline import extract_dataset
from freqforest.synth import SynthConfig, synth_generate


@pytest.fixture(scope="session")
def synth_manifest(tmp_path_factory):
    out = tmp_path_factory.mktemp("synthdata")
    return synth_generate(SynthConfig(seed=0), out)


@pytest.fixture(scope="session")
def synth_samples(synth_manifest):
    return extract_dataset(synth_manifest)
