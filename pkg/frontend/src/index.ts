export {
  BridgeError,
  BridgeSession,
  type Bounds,
  type BridgeOptions,
  type ScheduleKind,
  type ScheduleParams,
  type ScheduleResult,
  type SpatialMapArtifact,
  type SpatialMapParams,
} from "./bridge.js";
export {
  embedScheduleSlice,
  embedTimestep,
  type EmbeddingMap,
} from "./embedding.js";
export { at, parseNpy, readNpy, type NpyArray, type NpyDtype } from "./npy.js";
