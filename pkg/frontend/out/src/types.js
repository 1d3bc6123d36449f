// Shapes of the service JSON API.
export {};
