"""Protocol runners for every key establishment class."""

from .ake import authenticate_uke, gm_transport_exchange, run_mac_qke, run_mac_ske, run_sig_qke, run_sig_ske, run_ske
from .base import Interference, MitmPlan, ProtocolRun, RunSeeds
from .classical import run_oob, run_pge, run_seb
from .kdc import KdcState, run_kdc_mediated
from .two_phase import ChainState, TwoPhaseChain, run_two_phase

__all__ = [
    "ChainState",
    "KdcState",
    "TwoPhaseChain",
    "run_kdc_mediated",
    "run_mac_ske",
    "run_sig_ske",
    "run_two_phase",
    "Interference",
    "MitmPlan",
    "ProtocolRun",
    "RunSeeds",
    "authenticate_uke",
    "gm_transport_exchange",
    "run_mac_qke",
    "run_oob",
    "run_pge",
    "run_seb",
    "run_sig_qke",
    "run_ske",
]
