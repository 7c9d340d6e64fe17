export {
  GuardHandle,
  PkgguardClient,
  PkgguardError,
  type OpenGuardOptions,
  type ProcessResult,
  type RegionEvent,
  type ReplayResult,
  type ReplayStep,
  type SyntheticFixture,
} from './client.js';
export { generate, loadVocab, mulberry32, type GenerationResult } from './generation.js';
