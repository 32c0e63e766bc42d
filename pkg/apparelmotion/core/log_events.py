from dataclasses import dataclass

from apparelmotion.core.log import BaseLogEvent, EventName


@dataclass(frozen=True)
class LogEvent(BaseLogEvent):
    """Contains EventNames for logging."""

    AblationStart: EventName
    AblationVariantEnd: EventName
    AblationEnd: EventName

    CheckpointLoaded: EventName
    CheckpointSaved: EventName

    ConfigResolved: EventName

    CorpusBuildStart: EventName
    CorpusQueueSample: EventName
    CorpusSampleEnd: EventName
    CorpusBuildEnd: EventName

    DegenerateEdge: EventName

    EvaluateStart: EventName
    EvaluateEnd: EventName
    ZeroLengthReferenceEdge: EventName

    GeodesicStart: EventName
    GeodesicEnd: EventName
    GeodesicUnreachable: EventName

    InferStart: EventName
    InferWindowEnd: EventName
    InferEnd: EventName

    NonFiniteGradient: EventName

    ReadFromFSStart: EventName
    ReadFromFSEnd: EventName

    SimulateRestEquilibrium: EventName
    SimulateStart: EventName
    SimulateEnd: EventName

    TrainStageStart: EventName
    TrainEpochEnd: EventName
    TrainStageEnd: EventName

    WriteToFSStart: EventName
    WriteToFSEnd: EventName
