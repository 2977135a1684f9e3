import { ApiError, type ApiClient } from './api.js';
import type { ViolationRecord } from './types.js';

export type ReviewOutcome =
  | { kind: 'applied'; record: ViolationRecord }
  | { kind: 'conflict'; record: ViolationRecord }
  | { kind: 'error'; message: string };

// Submit a verdict; on a review conflict (someone else got there first, or
// a double click) fetch the server's record so the UI can reconcile to it.
export async function submitReview(
  api: ApiClient,
  violationId: string,
  verdict: 'confirm' | 'dismiss',
  operator: string,
): Promise<ReviewOutcome> {
  try {
    const record = await api.reviewViolation(violationId, verdict, operator);
    return { kind: 'applied', record };
  } catch (e) {
    if (e instanceof ApiError && e.status === 409) {
      try {
        const record = await api.getViolation(violationId);
        return { kind: 'conflict', record };
      } catch (inner) {
        return { kind: 'error', message: inner instanceof Error ? inner.message : String(inner) };
      }
    }
    return { kind: 'error', message: e instanceof Error ? e.message : String(e) };
  }
}

export function mergeRecord(items: ViolationRecord[], record: ViolationRecord): ViolationRecord[] {
  return items.map((item) => (item.violation_id === record.violation_id ? record : item));
}

export function slipNumbers(items: ViolationRecord[]): string[] {
  return items.filter((i) => i.slip_no !== null).map((i) => i.slip_no as string);
}
