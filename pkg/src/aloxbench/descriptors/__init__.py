from aloxbench.descriptors.acsf import AcsfParams, AtomFeatures, acsf_compute
from aloxbench.descriptors.soap import (
    Fingerprint,
    SoapParams,
    fingerprint_distance,
    pairwise_distances,
    soap_compute,
)

__all__ = [
    "AcsfParams", "AtomFeatures", "Fingerprint", "SoapParams", "acsf_compute",
    "fingerprint_distance", "pairwise_distances", "soap_compute",
]
