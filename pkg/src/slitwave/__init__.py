"""Quantum-mechanical model of neutron single- and double-slit diffraction."""
from .core import (HBAR, NEUTRON_MASS, BeamParams, ModeIndex, SlitGeometry, Truncation,
                   fourier_coefficient, in_slit_wavefunction, longitudinal_wavenumber,
                   slit_integral, wavenumber)
from .diffraction import (CoherenceParams, DetectorScan, IntensityProfile, coherent_amplitude,
                          intensity_coherent, intensity_decoherent, intensity_double,
                          intensity_single, slit_amplitude, slit_amplitudes)

__version__ = "0.1.0"

__all__ = [
    "HBAR", "NEUTRON_MASS", "BeamParams", "ModeIndex", "SlitGeometry", "Truncation",
    "fourier_coefficient", "in_slit_wavefunction", "longitudinal_wavenumber", "slit_integral",
    "wavenumber", "CoherenceParams", "DetectorScan", "IntensityProfile", "coherent_amplitude",
    "intensity_coherent", "intensity_decoherent", "intensity_double", "intensity_single",
    "slit_amplitude", "slit_amplitudes",
]
