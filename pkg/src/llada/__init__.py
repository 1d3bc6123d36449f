"""Traffic-rule policy adaptation for drivers and motion planners.

Subsystems: handbook corpus and keyword retrieval (`corpus`), LLM gateway
with record/replay cassettes (`llm`), traffic-rule extraction (`tre`),
plan adaptation and safety guardrails (`planner`), trajectory metrics and
re-planning (`motion_eval`), plus an HTTP service and a CLI.
"""

__version__ = "0.1.0"
