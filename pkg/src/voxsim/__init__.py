"""voxsim: systems simulator for streaming spoken-chatbot inference.

Covers the mechanics around a speech-token language model without any neural
networks: EMA vector-quantization codebook accounting, frame-rate token
arithmetic, the alternating text/speech generation template, the chunked
streaming speech-decoder schedule, an analytic first-audio latency model, a
pre-training mixture planner, dual-objective fine-tuning masks, and a
deterministic end-to-end trace simulator that ties them together.
"""

__version__ = "0.1.0"
