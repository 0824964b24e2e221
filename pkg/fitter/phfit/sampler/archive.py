import logging
from pathlib import Path

import pandas as pd

from phfit.core.distribution import moment_statistics
from phfit.utils.documents import dump_document, load_document
from phfit.utils.tables import read_table, write_table

from .models import Manifest, SampledInstance, SampleSpec

logger = logging.getLogger(__name__)

MANIFEST_FILE = "manifest.json"
MOMENTS_FILE = "moments.csv"
INSTANCES_DIR = "instances"


def moments_table(instances: list[SampledInstance]) -> pd.DataFrame:
    rows = []
    for instance in instances:
        row = {"id": instance.id}
        row.update({f"m{i}": value for i, value in enumerate(instance.moments, start=1)})
        statistics = moment_statistics(instance.moments)
        row.update(statistics.model_dump())
        rows.append(row)
    return pd.DataFrame(rows)


def write_testset(instances: list[SampledInstance], spec: SampleSpec, directory) -> Path:
    """
    Write one JSON document per instance, the manifest and the moment table.

    Args:
        - instances (list): output of generate_testset
        - spec (SampleSpec): echoed into the manifest
        - directory: archive root, created when missing
    """
    directory = Path(directory)
    for instance in instances:
        dump_document(instance, directory / INSTANCES_DIR / f"{instance.id}.json")
    manifest = Manifest(spec=spec, seed=spec.seed, instances=[i.id for i in instances])
    dump_document(manifest, directory / MANIFEST_FILE)
    write_table(moments_table(instances), directory / MOMENTS_FILE)
    logger.info(f"Wrote {len(instances)} instances to {directory}")
    return directory


def load_testset(directory) -> tuple[list[SampledInstance], Manifest]:
    directory = Path(directory)
    manifest = load_document(directory / MANIFEST_FILE, Manifest)
    instances = [
        load_document(directory / INSTANCES_DIR / f"{name}.json", SampledInstance)
        for name in manifest.instances
    ]
    return instances, manifest


def load_moments_table(directory) -> pd.DataFrame:
    return read_table(Path(directory) / MOMENTS_FILE, required=["id", "m1"])
