from .act import ActModel, AttentionRecord, LatentPosterior, LossBreakdown, ModelConfig
