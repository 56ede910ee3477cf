__version__ = '0.1.0'
__description__ = '''mtsim is a numerical simulation library and batch tool for kink solitons on microtubule displacement fields, the flow and localization equations they are embedded in, open-quantum-system decoherence (Lindblad evolution, quantum trajectories, collapse-time estimates), variational Gaussian soliton quantization and two-dimensional black-hole metric quadratures.'''
last_mod_date = 'October 19, 2026'
