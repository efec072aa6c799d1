from langgraph.graph import StateGraph, END
from typing_extensions import TypedDict
from typing import Any, List, Optional
from app.nodes.validate import validate_node
from app.nodes.ingest import ingest_node
from app.nodes.preprocess import preprocess_node
from app.nodes.train import train_node
from app.nodes.output import output_node
from app.config import RunConfig
from app.data.examples import ExampleSet
from app.models.params import ModelParams
from app.schemas.dataset import DatasetSchema, DenseStats
from app.schemas.model_config import ModelConfig, TrainConfig
from app.schemas.reports import TrainReport
import logging

logger = logging.getLogger(__name__)

STAGES = ("validate", "ingest", "preprocess", "train", "output")


class TrainState(TypedDict):
    run_config: RunConfig
    schema: Optional[DatasetSchema]
    model_config: Optional[ModelConfig]
    train_config: Optional[TrainConfig]
    raw_train: Optional[ExampleSet]
    raw_valid: Optional[ExampleSet]
    rejects: List[Any]
    train: Optional[ExampleSet]
    valid: Optional[ExampleSet]
    stats: Optional[DenseStats]
    valid_frac: Optional[float]
    params: Optional[ModelParams]
    report: Optional[TrainReport]
    checksum: Optional[int]
    error: Optional[Exception]


class TrainingPipeline:
    """LangGraph pipeline behind cmd_train: validate -> ingest -> preprocess -> train -> output."""

    def __init__(self, stages=STAGES):
        self.stages = tuple(stages)
        self.graph = None
        self._build_graph()

    def _build_graph(self):
        """Build the LangGraph DAG; every stage routes to END on error."""
        nodes = {
            "validate": validate_node,
            "ingest": ingest_node,
            "preprocess": preprocess_node,
            "train": train_node,
            "output": output_node,
        }
        workflow = StateGraph(TrainState)
        for name in self.stages:
            workflow.add_node(name, nodes[name])

        for current, following in zip(self.stages, self.stages[1:]):
            workflow.add_conditional_edges(
                current,
                self._should_continue,
                {
                    True: following,
                    False: END,
                }
            )
        workflow.add_edge(self.stages[-1], END)
        workflow.set_entry_point(self.stages[0])

        self.graph = workflow.compile()

    def _should_continue(self, state: dict) -> bool:
        if state.get("error") is not None:
            logger.info("Stopping pipeline after error")
            return False
        return True

    def run(self, run_config: RunConfig) -> dict:
        """Run the pipeline; re-raises the first stage error."""
        initial_state = TrainState(
            run_config=run_config,
            schema=None,
            model_config=None,
            train_config=None,
            raw_train=None,
            raw_valid=None,
            rejects=[],
            train=None,
            valid=None,
            stats=None,
            valid_frac=None,
            params=None,
            report=None,
            checksum=None,
            error=None
        )

        result = self.graph.invoke(initial_state)

        if result.get("error") is not None:
            raise result["error"]

        return result
