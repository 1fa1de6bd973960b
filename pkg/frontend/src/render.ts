// Minimal DOM rendering; no framework. Re-renders the queue table and the
// recalibration panel from their controllers' states.

import type { QueueController, QueueState } from './queueController.js';
import type { RecalibrationPanel, RecalibrationState } from './recalibrationPanel.js';
import { toViewModel } from './viewModel.js';
import type { ReviewItemStatus } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  node.append(...children);
  return node;
}

function pct(x: number): string {
  return `${(100 * x).toFixed(1)}%`;
}

export function renderQueue(root: HTMLElement, controller: QueueController): void {
  const render = (state: QueueState) => {
    root.replaceChildren();
    root.append(
      el('div', { class: 'queue-header' }, [
        el('span', { class: 'badge' }, [`pending: ${state.pendingCount}`]),
        el('span', { class: `connection ${state.connection}` }, [
          state.connection === 'ok' ? 'connected' : 'connection lost - retrying',
        ]),
      ]),
    );
    if (state.notice) {
      const notice = el('div', { class: 'notice' }, [state.notice, ' ']);
      const dismiss = el('button', {}, ['dismiss']);
      dismiss.onclick = () => controller.clearNotice();
      notice.append(dismiss);
      root.append(notice);
    }

    const filterBar = el('div', { class: 'filters' });
    for (const f of ['pending', 'confirmed', 'relabeled', 'all'] as const) {
      const button = el('button', { class: state.filter === f ? 'active' : '' }, [f]);
      button.onclick = () =>
        void controller.setFilter(f === 'all' ? undefined : (f as ReviewItemStatus));
      filterBar.append(button);
    }
    root.append(filterBar);

    if (state.items.length === 0) {
      root.append(el('p', { class: 'empty-state' }, ['No items in this view.']));
      return;
    }

    const table = el('table', { class: 'queue' });
    table.append(
      el('tr', {}, ['id', 'sample', 'predicted', 'T', 'I', 'F', 'severity', 'status', 'actions']
        .map((h) => el('th', {}, [h]))),
    );
    for (const item of state.items) {
      const vm = toViewModel(item);
      const actions = el('td', {});
      if (item.status === 'pending') {
        const confirm = el('button', {}, ['confirm']);
        confirm.onclick = () => void controller.submitVerdict(item.id, { verdict: 'confirm' });
        const relabel = el('button', {}, ['relabel...']);
        relabel.onclick = () => {
          const label = prompt('New class name:');
          if (label) void controller.submitVerdict(item.id, { verdict: 'relabel', label });
        };
        actions.append(confirm, relabel);
      } else {
        actions.append(item.analyst_label ?? '-');
      }
      table.append(
        el('tr', { class: `severity-${vm.severity}` }, [
          el('td', {}, [item.id]),
          el('td', {}, [item.sample_id]),
          el('td', {}, [vm.predictedLabel]),
          el('td', {}, [vm.truth.toFixed(4)]),
          el('td', {}, [vm.indeterminacy.toFixed(4)]),
          el('td', {}, [vm.falsity.toFixed(4)]),
          el('td', {}, [vm.severity]),
          el('td', {}, [item.status]),
          actions,
        ]),
      );
    }
    root.append(table);

    const pager = el('div', { class: 'pager' });
    const prev = el('button', {}, ['prev']);
    prev.disabled = state.page <= 1;
    prev.onclick = () => void controller.setPage(state.page - 1);
    const next = el('button', {}, ['next']);
    next.disabled = state.items.length < state.pageSize;
    next.onclick = () => void controller.setPage(state.page + 1);
    pager.append(prev, el('span', {}, [` page ${state.page} `]), next);
    root.append(pager);
  };
  controller.subscribe(render);
}

export function renderRecalibration(root: HTMLElement, panel: RecalibrationPanel): void {
  const render = (state: RecalibrationState) => {
    root.replaceChildren();
    root.append(el('h2', {}, ['Thresholds']));
    if (state.error) {
      root.append(el('div', { class: 'error' }, [state.error]));
    }
    if (state.policy) {
      root.append(
        el('p', {}, [
          `policy v${state.policy.version} (${state.policy.mode}, `,
          `global tau ${state.policy.global_tau})`,
        ]),
      );
      const table = el('table', {});
      table.append(el('tr', {}, [el('th', {}, ['class']), el('th', {}, ['tau'])]));
      for (const [name, tau] of Object.entries(state.policy.per_class_tau)) {
        table.append(el('tr', {}, [el('td', {}, [name]), el('td', {}, [tau.toFixed(4)])]));
      }
      root.append(table);
    }

    const input = el('input', { type: 'number', min: '1', max: '100', value: '80' });
    const previewButton = el('button', {}, ['preview']);
    previewButton.onclick = () => void panel.preview(Number(input.value));
    const applyButton = el('button', {}, ['apply recalibration']);
    applyButton.onclick = () => void panel.apply(Number(input.value));
    root.append(el('div', { class: 'what-if' }, [input, previewButton, applyButton]));

    if (state.preview) {
      root.append(el('h3', {}, [`projected flag rates @ p${state.preview.percentile}`]));
      const table = el('table', {});
      for (const [name, rate] of Object.entries(state.preview.projectedFlagRates)) {
        table.append(el('tr', {}, [el('td', {}, [name]), el('td', {}, [pct(rate)])]));
      }
      root.append(table);
    }
  };
  panel.subscribe(render);
}
