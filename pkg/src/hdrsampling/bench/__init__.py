"""Benchmark campaigns, error metrics and rankings."""
from .campaign import (BenchmarkRecord, CampaignConfig, campaign_tasks, load_records,
                       run_campaign)
from .metrics import noise_tolerance, relative_mse, rmse, rrie
from .ranking import HeatRanking, median_of, rank_heats, summarize

__all__ = [
    "BenchmarkRecord", "CampaignConfig", "HeatRanking", "campaign_tasks", "load_records",
    "median_of", "noise_tolerance", "rank_heats", "relative_mse", "rmse", "rrie",
    "run_campaign", "summarize",
]
