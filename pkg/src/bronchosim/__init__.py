"""bronchosim: airway-mask-to-bronchoscopy synthetic dataset engine."""

__version__ = "0.1.0"
