pub struct ConditionalState;
pub struct MeasurementRecord;
