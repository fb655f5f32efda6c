"""curekit - nonparametric mixture cure models for right-censored data."""

from curekit.bandwidth_boot import bootstrap_resample, latency_hboot, probcure_hboot, smooth_bandwidths
from curekit.bandwidths import BandwidthGrid, BandwidthSelection, BandwidthSpec
from curekit.beran import beran, beran_censoring, beran_survival, berancv
from curekit.control import ControlParams
from curekit.estimates import CureEstimate, LatencyEstimate, SurvivalEstimate
from curekit.hyptests import estimate_eta, testcov, testmz, u_process
from curekit.mixture_cure import latency, probcure
from curekit.pilot import PilotBandwidth, get_pilot, hpilot, register_pilot
from curekit.survival_data import (
    SurvivalSample,
    epanechnikov,
    km_cure,
    km_cure_by_strata,
    km_latency,
    km_survival,
    nw_weights,
)

__version__ = "0.1.0"
