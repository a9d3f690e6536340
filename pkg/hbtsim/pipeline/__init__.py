"""Workflow orchestration for hbtsim commands."""

from hbtsim.pipeline.workflow import MeasurementWorkflow

__all__ = ["MeasurementWorkflow"]
