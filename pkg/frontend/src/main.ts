import { ApiClient } from "./api.js";
import { PracticeApp } from "./app.js";
import { MicrophoneSource } from "./recorder.js";

const root = document.getElementById("app");
if (root) {
  const app = new PracticeApp(root, new ApiClient(""), new MicrophoneSource());
  void app.init();
}
