"""RCP Two-Delay Stability and Hopf Toolkit Source Code"""

__version__ = "0.1.0"
