import { ApiClient } from './client.js';
import { startPolling } from './polling.js';
import { QueueController } from './queueController.js';
import { RecalibrationPanel } from './recalibrationPanel.js';
import { renderQueue, renderRecalibration } from './render.js';

const serviceUrl =
  new URLSearchParams(window.location.search).get('service') ?? 'http://127.0.0.1:8470';

const client = new ApiClient(serviceUrl);
const queue = new QueueController(client);
const panel = new RecalibrationPanel(client);

renderQueue(document.getElementById('queue')!, queue);
renderRecalibration(document.getElementById('recalibration')!, panel);

startPolling(() => queue.refresh(), 5000);
void panel.loadPolicy();
