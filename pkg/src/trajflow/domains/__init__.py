"""Trajectory datasets for tracking, forecasting and planning, plus CSV
ingestion and the shared normalisation."""

from .csvio import load_trajectory_csv, write_context_csv, write_trajectory_csv
from .dataset import Dataset
from .flight import FlightConfig, generate_flight_dataset, split_dataset, split_sizes
from .maze import MazeSpec, collides, expert_path, generate_maze_dataset, load_maze
from .norm import NormStats, denormalize, fit_stats, normalize
from .pursuit import PursuitScenario, generate_pursuit_dataset

__all__ = [
    "Dataset",
    "FlightConfig",
    "MazeSpec",
    "NormStats",
    "PursuitScenario",
    "collides",
    "denormalize",
    "expert_path",
    "fit_stats",
    "generate_flight_dataset",
    "generate_maze_dataset",
    "generate_pursuit_dataset",
    "load_maze",
    "load_trajectory_csv",
    "normalize",
    "split_dataset",
    "split_sizes",
    "write_context_csv",
    "write_trajectory_csv",
]
