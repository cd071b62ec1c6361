"""
Simulation and analysis toolkit for a doubly resonant, type-II PPKTP cavity
SPDC photon-pair source at 1550 nm.

Modules: ``dispersion`` (KTP Sellmeier), ``cavity`` (FSR, linewidth),
``clustering`` (cluster effect), ``qpm`` (poling period, gain envelope),
``biphoton`` (mode-sum G2), ``counting`` (time tags, CAR), ``interference``
(Franson, Michelson, UMI), ``fitting`` (bounded Levenberg-Marquardt) and
``cli``.
"""

__version__ = "0.1.0"
