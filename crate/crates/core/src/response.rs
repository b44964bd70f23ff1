pub struct FrequencySeries;
pub struct TransitionAmplitudes;
